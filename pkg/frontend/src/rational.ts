// Exact comparison of the service's "p" / "p/q" rational strings.
// Used for the advisory monotone-scale pre-check and for rendering; the
// server remains the legality authority.

export type Rational = { num: bigint; den: bigint }

const gcd = (a: bigint, b: bigint): bigint => {
  a = a < 0n ? -a : a
  b = b < 0n ? -b : b
  while (b) {
    ;[a, b] = [b, a % b]
  }
  return a
}

export const parseRational = (text: string): Rational => {
  const trimmed = text.trim()
  const m = trimmed.match(/^(-?\d+)(?:\s*\/\s*(\d+))?$/)
  if (!m) throw new Error(`not a rational: ${JSON.stringify(text)}`)
  const num = BigInt(m[1])
  const den = m[2] === undefined ? 1n : BigInt(m[2])
  if (den === 0n) throw new Error('zero denominator')
  const g = gcd(num, den) || 1n
  return { num: num / g, den: den / g }
}

export const formatRational = (q: Rational): string =>
  q.den === 1n ? q.num.toString() : `${q.num}/${q.den}`

export const compareRationals = (a: Rational, b: Rational): number => {
  const lhs = a.num * b.den
  const rhs = b.num * a.den
  return lhs < rhs ? -1 : lhs > rhs ? 1 : 0
}

export const rationalLte = (a: string, b: string): boolean =>
  compareRationals(parseRational(a), parseRational(b)) <= 0

export const rationalToNumber = (text: string): number => {
  const q = parseRational(text)
  return Number(q.num) / Number(q.den)
}

export const isPositiveRational = (text: string): boolean => {
  try {
    return parseRational(text).num > 0n
  } catch {
    return false
  }
}
