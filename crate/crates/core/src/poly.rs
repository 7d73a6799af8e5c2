//! Dense univariate polynomials with coefficients in ascending order, and
//! real-root isolation by Sturm sequences.

/// Evaluate `sum c[k] x^k` by Horner's rule.
#[inline]
pub fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &v| acc * x + v)
}

pub fn derivative(c: &[f64]) -> Vec<f64> {
    c.iter().enumerate().skip(1).map(|(k, &v)| k as f64 * v).collect()
}

/// Drop trailing coefficients that are exactly zero.
pub fn trim(c: &[f64]) -> &[f64] {
    let len = c.iter().rposition(|&v| v != 0.0).map_or(0, |i| i + 1);
    &c[..len]
}

fn max_abs(c: &[f64]) -> f64 {
    c.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Scale to unit max-norm; a positive factor keeps every sign.
fn normalized(mut c: Vec<f64>) -> Vec<f64> {
    let m = max_abs(&c);
    if m > 0.0 {
        c.iter_mut().for_each(|v| *v /= m);
    }
    c
}

/// Remainder of `a` divided by `b` (`b` trimmed, nonzero leading coefficient)
/// with coefficients below `rel * (1 + largest quotient coefficient)` cleared.
fn remainder(a: &[f64], b: &[f64], rel: f64) -> Vec<f64> {
    let db = b.len() - 1;
    let lead = b[db];
    let mut r = a.to_vec();
    let mut qmax = 0.0f64;
    for k in (db..r.len()).rev() {
        let q = r[k] / lead;
        qmax = qmax.max(q.abs());
        for j in 0..=db {
            r[k - db + j] -= q * b[j];
        }
        r[k] = 0.0;
    }
    r.truncate(db);
    let floor = rel * (1.0 + qmax);
    for v in r.iter_mut() {
        if v.abs() <= floor {
            *v = 0.0;
        }
    }
    let len = trim(&r).len();
    r.truncate(len);
    r
}

/// Remainders below this (relative) end a Sturm chain.
const CHAIN_FLOOR: f64 = 1e-14;
/// Largest relative remainder of `p / gcd` accepted as exact division.
const GCD_DIVISION_TOL: f64 = 1e-9;
/// Taylor coefficients at an end of the window below this fraction of the
/// largest term count as zero, i.e. as a root at that end.
const END_ROOT_TOL: f64 = 1e-10;

/// Sturm sequence `p, p', -rem(p, p'), ...` of a polynomial, each member
/// normalized to unit max-norm.
#[derive(Debug, Clone)]
pub struct SturmSequence {
    polys: Vec<Vec<f64>>,
}

impl SturmSequence {
    /// `None` for the zero polynomial.
    pub fn new(p: &[f64]) -> Option<Self> {
        Self::with_floor(p, CHAIN_FLOOR)
    }

    fn with_floor(p: &[f64], floor: f64) -> Option<Self> {
        let p = trim(p);
        if p.is_empty() {
            return None;
        }
        let mut polys = vec![normalized(p.to_vec())];
        if p.len() > 1 {
            polys.push(normalized(derivative(&polys[0])));
            loop {
                let k = polys.len();
                if polys[k - 1].len() <= 1 {
                    break;
                }
                let mut r = remainder(&polys[k - 2], &polys[k - 1], floor);
                if r.is_empty() {
                    break;
                }
                r.iter_mut().for_each(|v| *v = -*v);
                polys.push(normalized(r));
            }
        }
        Some(Self { polys })
    }

    pub fn len(&self) -> usize {
        self.polys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polys.is_empty()
    }

    /// Number of sign changes along the sequence evaluated at `x`, zeros skipped.
    pub fn sign_variations(&self, x: f64) -> usize {
        let mut last = 0.0f64;
        let mut changes = 0;
        for p in &self.polys {
            let v = horner(p, x);
            if v != 0.0 {
                if last != 0.0 && (v > 0.0) != (last > 0.0) {
                    changes += 1;
                }
                last = v;
            }
        }
        changes
    }

    /// Distinct real roots in `(a, b]`, assuming `p(a) != 0`.
    pub fn count_roots(&self, a: f64, b: f64) -> usize {
        self.sign_variations(a).saturating_sub(self.sign_variations(b))
    }

    fn isolate(&self, a: f64, va: usize, b: f64, vb: usize, depth: u32, out: &mut Vec<(f64, f64, usize)>) {
        let n = va.saturating_sub(vb);
        if n == 0 {
            return;
        }
        if n == 1 || depth >= 64 || b - a <= f64::EPSILON * (a.abs() + b.abs()) {
            out.push((a, b, n));
            return;
        }
        let p = &self.polys[0];
        let mut m = 0.5 * (a + b);
        let mut shift = 1e-3 * (b - a);
        while horner(p, m) == 0.0 && shift > 0.0 {
            m += shift;
            shift *= -2.0;
            if !(m > a && m < b) {
                m = 0.5 * (a + b) + 1e-6 * (b - a);
                break;
            }
        }
        let vm = self.sign_variations(m);
        self.isolate(a, va, m, vm, depth + 1, out);
        self.isolate(m, vm, b, vb, depth + 1, out);
    }
}

fn bisect_sign_change(p: &[f64], mut a: f64, mut b: f64, tol: f64) -> f64 {
    let sa = horner(p, a) > 0.0;
    while b - a > tol {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let v = horner(p, m);
        if v == 0.0 {
            return m;
        }
        if (v > 0.0) == sa {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Quotient of `a` divided by `b` (`b` trimmed, nonzero leading coefficient).
fn quotient(a: &[f64], b: &[f64]) -> Vec<f64> {
    let db = b.len() - 1;
    if a.len() <= db {
        return Vec::new();
    }
    let lead = b[db];
    let mut r = a.to_vec();
    let mut q = vec![0.0; a.len() - db];
    for k in (db..r.len()).rev() {
        let c = r[k] / lead;
        q[k - db] = c;
        for j in 0..=db {
            r[k - db + j] -= c * b[j];
        }
    }
    q
}

/// `p / gcd(p, p')` and the gcd, when a nonconstant gcd divides `p` cleanly.
fn square_free_part(p: &[f64]) -> (Vec<f64>, Option<Vec<f64>>) {
    let p = normalized(p.to_vec());
    if let Some(chain) = SturmSequence::new(&p) {
        if let Some(g) = chain.polys.last().filter(|g| g.len() > 1) {
            let rem = remainder(&p, g, 0.0);
            if max_abs(&rem) <= GCD_DIVISION_TOL {
                return (normalized(quotient(&p, g)), Some(g.clone()));
            }
        }
    }
    (p, None)
}

/// Coefficients of `p(x + e)` by repeated synthetic division.
pub fn taylor_shift(c: &[f64], e: f64) -> Vec<f64> {
    let mut t = c.to_vec();
    let n = t.len();
    for i in 0..n {
        for j in (i..n - 1).rev() {
            t[j] += e * t[j + 1];
        }
    }
    t
}

/// Multiplicity of a root of `c` at `e`, read from the Taylor coefficients
/// about `e` that are negligible on `[e - w, e + w]`.
fn end_multiplicity(c: &[f64], e: f64, w: f64) -> usize {
    let t = taylor_shift(c, e);
    let mut wk = 1.0;
    let terms: Vec<f64> = t
        .iter()
        .map(|v| {
            let x = v.abs() * wk;
            wk *= w;
            x
        })
        .collect();
    let scale = terms.iter().fold(0.0f64, |m, &v| m.max(v));
    let m = terms.iter().take_while(|&&x| x <= END_ROOT_TOL * scale).count();
    m.min(c.len() - 1)
}

/// Quotient of `c` by `x - e`, remainder dropped.
fn divide_linear(c: &[f64], e: f64) -> Vec<f64> {
    let n = c.len() - 1;
    let mut q = vec![0.0; n];
    let mut acc = 0.0;
    for k in (1..=n).rev() {
        acc = c[k] + e * acc;
        q[k - 1] = acc;
    }
    q
}

/// Roots in `(a, b)` at which `p` changes sign, ascending, each located to
/// within `tol`. Roots of even multiplicity are skipped; they do not change
/// the sign pattern of `p`. Roots at `a` or `b` themselves are excluded.
///
/// Roots at the ends of the window, often of high multiplicity, are divided
/// out first, their multiplicities read from Taylor expansions about `a` and
/// `b`; the factors removed have constant sign on `(a, b)`. Remaining repeated roots are
/// divided out by `gcd(p, p')`, distinct roots are isolated by Sturm
/// sign-variation counts and recursive halving, and each bracket is bisected.
pub fn sign_changing_roots(p: &[f64], a: f64, b: f64, tol: f64) -> Vec<f64> {
    let p = trim(p);
    if p.len() <= 1 || !(b > a) {
        return Vec::new();
    }
    if p.len() == 2 {
        let r = -p[0] / p[1];
        return if r > a && r < b { vec![r] } else { Vec::new() };
    }
    let w = b - a;
    let mut r = normalized(p.to_vec());
    let ma = end_multiplicity(&r, a, w);
    let mb = end_multiplicity(&r, b, w);
    for _ in 0..ma {
        r = divide_linear(&r, a);
    }
    for _ in 0..mb.min(r.len().saturating_sub(1)) {
        r = divide_linear(&r, b);
    }
    let pv = trim(&r);
    if pv.len() <= 1 {
        return Vec::new();
    }
    let (q, gcd) = square_free_part(pv);
    let Some(chain) = SturmSequence::new(&q) else {
        return Vec::new();
    };
    if q.len() <= 1 {
        return Vec::new();
    }
    let (mut lo, mut hi) = (a, b);
    let nudge = 1e-9 * w;
    if horner(&q, lo) == 0.0 {
        lo += nudge;
    }
    if horner(&q, hi) == 0.0 {
        hi -= nudge;
    }
    let mut brackets = Vec::new();
    chain.isolate(
        lo,
        chain.sign_variations(lo),
        hi,
        chain.sign_variations(hi),
        0,
        &mut brackets,
    );
    let mut roots = Vec::with_capacity(brackets.len());
    for (x0, x1, _) in brackets {
        let (v0, v1) = (horner(&q, x0), horner(&q, x1));
        let crosses = v1 == 0.0 || (v0 != 0.0 && (v0 > 0.0) != (v1 > 0.0));
        if !crosses {
            continue;
        }
        // The gcd changes sign across roots of even multiplicity.
        if let Some(g) = &gcd {
            let (g0, g1) = (horner(g, x0), horner(g, x1));
            if g0 != 0.0 && g1 != 0.0 && (g0 > 0.0) != (g1 > 0.0) {
                continue;
            }
        }
        let x = if v1 == 0.0 {
            x1
        } else {
            bisect_sign_change(&q, x0, x1, tol)
        };
        if x > a && x < b {
            roots.push(x);
        }
    }
    roots.dedup();
    roots
}

#[cfg(test)]
mod tests {
    use super::*;

    fn from_roots(roots: &[f64]) -> Vec<f64> {
        let mut c = vec![1.0];
        for &r in roots {
            let mut next = vec![0.0; c.len() + 1];
            for (k, &v) in c.iter().enumerate() {
                next[k + 1] += v;
                next[k] -= r * v;
            }
            c = next;
        }
        c
    }

    #[test]
    fn sturm_counts_distinct_roots() {
        let p = from_roots(&[-0.7, -0.1, 0.2, 0.9]);
        let s = SturmSequence::new(&p).unwrap();
        assert_eq!(s.count_roots(-1.0, 1.0), 4);
        assert_eq!(s.count_roots(-0.5, 0.5), 2);
        assert_eq!(s.count_roots(0.95, 2.0), 0);
        // x^2 - 2
        let s = SturmSequence::new(&[-2.0, 0.0, 1.0]).unwrap();
        assert_eq!(s.count_roots(0.0, 2.0), 1);
    }

    #[test]
    fn double_root_counted_once_and_skipped() {
        let p = from_roots(&[0.3, 0.3, -0.5]);
        let s = SturmSequence::new(&p).unwrap();
        assert_eq!(s.count_roots(-1.0, 1.0), 2);
        let r = sign_changing_roots(&p, -1.0, 1.0, 1e-14);
        assert_eq!(r.len(), 1);
        assert!((r[0] + 0.5).abs() < 1e-12);
    }

    #[test]
    fn close_pair_is_separated() {
        let p = from_roots(&[0.1, 0.1 + 1e-6, 0.5, -0.8, 0.95]);
        let r = sign_changing_roots(&p, -1.0, 1.0, 1e-14);
        assert_eq!(r.len(), 5, "{r:?}");
        assert!((r[1] - 0.1).abs() < 1e-10 && (r[2] - 0.100001).abs() < 1e-10);
    }

    #[test]
    fn roots_next_to_double_roots_at_the_ends() {
        // -s (1 - s^2)^2, the shape of a lone triweight bump's derivative
        let p = [0.0, -1.0, 0.0, 2.0, 0.0, -1.0];
        let r = sign_changing_roots(&p, -1.0 + 1e-9, 1.0 - 1e-9, 1e-14);
        assert_eq!(r, vec![0.0]);
        let p = from_roots(&[0.2, 0.2, 0.2, -0.4, 0.7, 0.7]);
        let r = sign_changing_roots(&p, -1.0, 1.0, 1e-14);
        assert_eq!(r.len(), 2, "{r:?}");
        assert!((r[0] + 0.4).abs() < 1e-10 && (r[1] - 0.2).abs() < 1e-4);
    }

    #[test]
    fn high_multiplicity_at_the_ends() {
        // -s (1 - s^2)^k and (s - 0.3) (1 - s^2)^k up to the degree of K'_12
        for k in 1..=12 {
            let mut ends = vec![];
            for _ in 0..k {
                ends.extend([-1.0, 1.0]);
            }
            let lone = from_roots(&[&ends[..], &[0.0]].concat());
            let r = sign_changing_roots(&lone, -1.0 + 1e-9, 1.0 - 1e-9, 1e-14);
            assert_eq!(r.len(), 1, "k={k} {r:?}");
            assert!(r[0].abs() < 1e-10, "k={k} {r:?}");
            let shifted = from_roots(&[&ends[..], &[0.3, -0.6, 0.8]].concat());
            let r = sign_changing_roots(&shifted, -1.0 + 1e-9, 1.0 - 1e-9, 1e-14);
            assert_eq!(r.len(), 3, "k={k} {r:?}");
        }
    }

    #[test]
    fn endpoint_roots_are_excluded() {
        let p = from_roots(&[0.0, 1.0, 0.5]);
        let r = sign_changing_roots(&p, 0.0, 1.0, 1e-14);
        assert_eq!(r.len(), 1);
        assert!((r[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn linear_and_constant() {
        assert_eq!(sign_changing_roots(&[1.0], 0.0, 1.0, 1e-12), Vec::<f64>::new());
        assert_eq!(sign_changing_roots(&[-0.5, 1.0], 0.0, 1.0, 1e-12), vec![0.5]);
        assert!(SturmSequence::new(&[0.0, 0.0]).is_none());
    }
}
