// DOM glue for the browser console. All game logic lives in the tested
// modules; this file only wires events to them and paints the models.

import { GameServiceClient } from './api'
import {
  ComposerState,
  buildFamilyMove,
  buildSplitMove,
  commitPiece,
  dropPiece,
  emptyComposer,
  prepareChallenge,
  togglePoint,
} from './composer'
import { geometricLayout, heatModel, pieceColor } from './heatmap'
import { SessionPoller } from './poller'
import { current, openTranscript, step, Cursor } from './transcripts'
import type { SessionView, SpaceDoc } from './types'

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id)
  if (!el) throw new Error(`missing element #${id}`)
  return el as T
}

const client = new GameServiceClient(
  (window as unknown as { COARSEKIT_BASE?: string }).COARSEKIT_BASE ?? '',
)

let session: SessionView | null = null
let space: SpaceDoc | null = null
let composer: ComposerState = emptyComposer('fdc')
let highlighted: number[] = []
let poller: SessionPoller | null = null
let cursor: Cursor | null = null
let lastTranscriptRaw = ''

const setStatus = (text: string, bad = false): void => {
  const el = $('status')
  el.textContent = text
  el.className = bad ? 'bad' : ''
}

const renderSpace = (): void => {
  if (!space) return
  const host = $('board')
  host.innerHTML = ''
  const layout = geometricLayout(space)
  const pieceOf = new Map<number, { family: 0 | 1; piece: number }>()
  composer.pieces.forEach((p, i) =>
    p.points.forEach((pt) => pieceOf.set(pt, { family: p.family, piece: i })),
  )
  if (layout) {
    const maxX = Math.max(...layout.map((p) => p.x))
    const maxY = Math.max(...layout.map((p) => p.y))
    const grid = document.createElement('div')
    grid.className = 'layout'
    grid.style.gridTemplateColumns = `repeat(${maxX + 1}, 26px)`
    grid.style.gridTemplateRows = `repeat(${maxY + 1}, 26px)`
    for (const p of layout) {
      const cell = document.createElement('button')
      cell.className = 'pt'
      cell.textContent = String(p.index)
      cell.style.gridColumn = String(p.x + 1)
      cell.style.gridRow = String(p.y + 1)
      const owner = pieceOf.get(p.index)
      if (owner) cell.style.background = pieceColor(owner.family, owner.piece)
      if (composer.selection.includes(p.index)) cell.classList.add('selected')
      if (highlighted.includes(p.index)) cell.classList.add('witness')
      cell.onclick = () => {
        composer = togglePoint(composer, p.index)
        renderSpace()
      }
      grid.appendChild(cell)
    }
    host.appendChild(grid)
  }
  const model = heatModel(space, highlighted)
  const canvas = document.createElement('canvas')
  canvas.width = canvas.height = Math.min(360, model.n * 6)
  const px = canvas.width / model.n
  const ctx = canvas.getContext('2d')
  if (ctx) {
    for (const cell of model.cells) {
      const v = Math.round(255 * (1 - cell.shade))
      ctx.fillStyle =
        model.highlighted.has(cell.i) || model.highlighted.has(cell.j)
          ? `rgb(255, ${v}, ${v})`
          : `rgb(${v}, ${v}, 255)`
      ctx.fillRect(cell.j * px, cell.i * px, Math.ceil(px), Math.ceil(px))
    }
  }
  host.appendChild(canvas)
}

const renderSession = (): void => {
  if (!session) return
  $('session-info').textContent = JSON.stringify(
    {
      id: session.id,
      version: session.version,
      status: session.status,
      turn: session.turn,
      pending: session.pending,
      schedule: session.schedule,
      uncovered: session.uncovered?.length,
      mesh: session.mesh,
    },
    null,
    1,
  )
  const history = $('history')
  history.innerHTML = ''
  session.schedule.forEach((r, i) => {
    const li = document.createElement('li')
    li.textContent = `round ${i + 1}: scale ${r}`
    history.appendChild(li)
  })
  const pieces = $('pieces')
  pieces.innerHTML = ''
  composer.pieces.forEach((p, i) => {
    const li = document.createElement('li')
    li.textContent = `family ${p.family + 1}: [${p.points.join(', ')}]`
    li.style.color = pieceColor(p.family, i)
    const drop = document.createElement('button')
    drop.textContent = 'x'
    drop.onclick = () => {
      composer = dropPiece(composer, i)
      renderAll()
    }
    li.appendChild(drop)
    pieces.appendChild(li)
  })
}

const renderAll = (): void => {
  renderSpace()
  renderSession()
}

const absorbSession = (s: SessionView): void => {
  session = s
  if (composer.kind !== s.kind) composer = emptyComposer(s.kind)
  renderAll()
}

const submit = async (move: Parameters<GameServiceClient['submitMove']>[2]): Promise<void> => {
  if (!session) return
  const outcome = await client.submitMove(session.id, session.version, move)
  if (outcome.kind === 'conflict') {
    setStatus(`version conflict; refreshing to ${outcome.version}`, true)
    absorbSession(await client.getSession(session.id))
    return
  }
  if (outcome.kind === 'rejected') {
    highlighted = outcome.rejection.witness ? outcome.rejection.witness.flat() : []
    setStatus(`rejected: ${outcome.rejection.error}`, true)
    renderAll()
    return
  }
  highlighted = []
  composer = emptyComposer(outcome.session.kind)
  setStatus(`accepted; version ${outcome.session.version} (${outcome.session.status})`)
  absorbSession(outcome.session)
  poller?.absorb(outcome.session)
}

const main = (): void => {
  $('btn-register').onclick = async () => {
    const kind = ($('gen-kind') as HTMLInputElement).value
    const n = Number(($('gen-n') as HTMLInputElement).value)
    const body = kind === 'grid' ? { kind, side: n } : { kind, n }
    try {
      const reg = await client.registerSpace(body)
      space = await client.getSpace(reg.name)
      setStatus(`registered ${reg.name} (${reg.size} points)`)
      renderAll()
    } catch (err) {
      setStatus(String(err), true)
    }
  }

  $('btn-create').onclick = async () => {
    if (!space) return setStatus('register a space first', true)
    const kind = ($('game-kind') as HTMLInputElement).value as 'fdc' | 'asc'
    const bound = ($('game-bound') as HTMLInputElement).value
    const machineRole = ($('machine-role') as HTMLInputElement).value
    const body: Record<string, unknown> = {
      space: space.name,
      kind,
      bound,
      max_rounds: 100,
    }
    if (machineRole === 'challenger' || machineRole === 'responder') {
      body.machine_role = machineRole
      body[machineRole === 'challenger' ? 'challenger' : 'responder'] =
        machineRole === 'challenger' ? 'doubling:1' : kind === 'fdc' ? 'radial' : 'greedy'
    }
    try {
      const s = await client.createSession(body)
      composer = emptyComposer(s.kind)
      absorbSession(s)
      poller?.stop()
      poller = new SessionPoller(client, s.id, absorbSession)
      poller.start()
      setStatus(`session ${s.id} created`)
    } catch (err) {
      setStatus(String(err), true)
    }
  }

  $('btn-challenge').onclick = () => {
    if (!session) return
    const check = prepareChallenge(session, ($('challenge') as HTMLInputElement).value)
    if (!check.ok) return setStatus(check.problem, true) // advisory pre-check
    void submit(check.move)
  }

  $('btn-piece-1').onclick = () => {
    composer = commitPiece(composer, 0)
    renderAll()
  }
  $('btn-piece-2').onclick = () => {
    composer = commitPiece(composer, 1)
    renderAll()
  }

  $('btn-respond').onclick = () => {
    if (!session) return
    try {
      const move =
        session.kind === 'fdc'
          ? { response: buildSplitMove(session, composer) }
          : { response: buildFamilyMove(composer) }
      void submit(move)
    } catch (err) {
      setStatus(String(err), true)
    }
  }

  $('btn-download').onclick = async () => {
    if (!session) return
    lastTranscriptRaw = await client.getTranscriptRaw(session.id)
    const blob = new Blob([lastTranscriptRaw], { type: 'application/json' })
    const a = document.createElement('a')
    a.href = URL.createObjectURL(blob)
    a.download = `transcript-${session.id}.json`
    a.click()
    cursor = openTranscript(JSON.parse(lastTranscriptRaw))
    renderCursor()
  }

  $('btn-prev').onclick = () => {
    if (cursor) {
      cursor = step(cursor, -1)
      renderCursor()
    }
  }
  $('btn-next').onclick = () => {
    if (cursor) {
      cursor = step(cursor, +1)
      renderCursor()
    }
  }
}

const renderCursor = (): void => {
  if (!cursor) return
  const frame = current(cursor)
  $('replay').textContent =
    `${frame.description}\n` +
    frame.families.map((f) => `family ${f.family + 1}: [${f.points.join(', ')}]`).join('\n') +
    (frame.uncovered.length ? `\nuncovered: ${frame.uncovered.join(', ')}` : '')
}

document.addEventListener('DOMContentLoaded', main)
