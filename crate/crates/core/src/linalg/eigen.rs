//! Eigenvalues of general complex matrices: Householder reduction to upper
//! Hessenberg form followed by single-shift complex QR iteration with
//! Wilkinson shifts and Givens rotations.

use super::{ComplexMatrix, ComplexVector, LinalgError, Result, C64, ZERO};

/// Sweeps allowed per unit of dimension before giving up.
const SWEEPS_PER_DIM: usize = 100;

/// All eigenvalues of a square matrix, with algebraic multiplicity, sorted
/// by descending modulus and then by ascending argument.
pub fn eig_general(a: &ComplexMatrix) -> Result<ComplexVector> {
    if !a.is_square() {
        return Err(LinalgError::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let n = a.rows();
    if n == 0 {
        return Err(LinalgError::Empty);
    }
    let mut h = a.clone();
    reduce_to_hessenberg(&mut h);
    let mut eigs = hessenberg_qr(&mut h)?;
    sort_eigenvalues(&mut eigs);
    ComplexVector::new(eigs)
}

/// Largest eigenvalue modulus.
pub fn spectral_radius(a: &ComplexMatrix) -> Result<f64> {
    Ok(eig_general(a)?.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Order: modulus descending, then argument ascending in (-pi, pi].
pub(crate) fn sort_eigenvalues(eigs: &mut [C64]) {
    eigs.sort_by(|x, y| {
        y.norm()
            .total_cmp(&x.norm())
            .then_with(|| x.arg().total_cmp(&y.arg()))
    });
}

fn reduce_to_hessenberg(a: &mut ComplexMatrix) {
    let n = a.rows();
    if n < 3 {
        return;
    }
    let mut v = vec![ZERO; n];
    for k in 0..n - 2 {
        let len = n - k - 1;
        let alpha_norm = (k + 1..n).map(|i| a[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        if alpha_norm == 0.0 {
            continue;
        }
        let x0 = a[(k + 1, k)];
        let phase = if x0.norm() == 0.0 { C64::new(1.0, 0.0) } else { x0 / x0.norm() };
        // v = x + phase * |x| e1 avoids cancellation in the leading entry.
        for (t, i) in (k + 1..n).enumerate() {
            v[t] = a[(i, k)];
        }
        v[0] += phase * alpha_norm;
        let vnorm = v[..len].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            continue;
        }
        for z in v[..len].iter_mut() {
            *z /= vnorm;
        }
        // Left: rows k+1.., columns k..
        for j in k..n {
            let mut dot = ZERO;
            for (t, i) in (k + 1..n).enumerate() {
                dot += v[t].conj() * a[(i, j)];
            }
            if dot == ZERO {
                continue;
            }
            for (t, i) in (k + 1..n).enumerate() {
                a[(i, j)] -= v[t] * dot * 2.0;
            }
        }
        // Right: all rows, columns k+1..
        for i in 0..n {
            let mut dot = ZERO;
            for (t, j) in (k + 1..n).enumerate() {
                dot += a[(i, j)] * v[t];
            }
            if dot == ZERO {
                continue;
            }
            for (t, j) in (k + 1..n).enumerate() {
                a[(i, j)] -= dot * v[t].conj() * 2.0;
            }
        }
        for i in k + 2..n {
            a[(i, k)] = ZERO;
        }
    }
}

fn eig_2x2(a: C64, b: C64, c: C64, d: C64) -> (C64, C64) {
    let s = a.l1_norm() + b.l1_norm() + c.l1_norm() + d.l1_norm();
    if s == 0.0 {
        return (ZERO, ZERO);
    }
    let (a, b, c, d) = (a / s, b / s, c / s, d / s);
    let half_tr = (a + d) * 0.5;
    let disc = ((a - half_tr) * (d - half_tr) - b * c) * -1.0;
    let root = disc.sqrt();
    ((half_tr + root) * s, (half_tr - root) * s)
}

/// Givens rotation `[[c, s], [-conj(s), c]]` mapping `(x, y)` onto `(r, 0)`.
fn givens(x: C64, y: C64) -> (f64, C64) {
    let ax = x.norm();
    if y == ZERO {
        return (1.0, ZERO);
    }
    if ax == 0.0 {
        return (0.0, y.conj() / y.norm());
    }
    let r = ax.hypot(y.norm());
    (ax / r, (x / ax) * y.conj() / r)
}

fn hessenberg_qr(h: &mut ComplexMatrix) -> Result<Vec<C64>> {
    let n = h.rows();
    let cap = SWEEPS_PER_DIM * n;
    let mut eigs = vec![ZERO; n];
    let norm = h.frobenius_norm();
    let small = f64::EPSILON * norm.max(f64::MIN_POSITIVE);
    let mut rotations: Vec<(f64, C64)> = Vec::with_capacity(n);
    let mut sweeps = 0usize;
    let mut since_deflation = 0usize;
    let mut hi = n - 1;

    loop {
        if hi == 0 {
            eigs[0] = h[(0, 0)];
            break;
        }
        // Locate the start of the trailing unreduced block.
        let mut lo = hi;
        while lo > 0 {
            let sub = h[(lo, lo - 1)].l1_norm();
            let diag = h[(lo, lo)].l1_norm() + h[(lo - 1, lo - 1)].l1_norm();
            if sub <= f64::EPSILON * diag || sub <= small {
                h[(lo, lo - 1)] = ZERO;
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            eigs[hi] = h[(hi, hi)];
            hi -= 1;
            since_deflation = 0;
            continue;
        }
        if lo + 1 == hi {
            let (e1, e2) = eig_2x2(h[(lo, lo)], h[(lo, hi)], h[(hi, lo)], h[(hi, hi)]);
            eigs[lo] = e1;
            eigs[hi] = e2;
            if lo == 0 {
                break;
            }
            hi = lo - 1;
            since_deflation = 0;
            continue;
        }

        sweeps += 1;
        since_deflation += 1;
        if sweeps > cap {
            return Err(LinalgError::NoConvergence { cap });
        }

        let shift = if since_deflation % 10 == 0 {
            // Exceptional shift to break cycles.
            h[(hi, hi)] + C64::new(0.75 * h[(hi, hi - 1)].norm(), 0.0)
        } else {
            let (e1, e2) = eig_2x2(
                h[(hi - 1, hi - 1)],
                h[(hi - 1, hi)],
                h[(hi, hi - 1)],
                h[(hi, hi)],
            );
            let d = h[(hi, hi)];
            if (e1 - d).norm() <= (e2 - d).norm() { e1 } else { e2 }
        };

        for k in lo..=hi {
            h[(k, k)] -= shift;
        }
        rotations.clear();
        for k in lo..hi {
            let (c, s) = givens(h[(k, k)], h[(k + 1, k)]);
            rotations.push((c, s));
            for j in k..=hi {
                let x = h[(k, j)];
                let y = h[(k + 1, j)];
                h[(k, j)] = x * c + s * y;
                h[(k + 1, j)] = -s.conj() * x + y * c;
            }
            h[(k + 1, k)] = ZERO;
        }
        for (offset, &(c, s)) in rotations.iter().enumerate() {
            let k = lo + offset;
            let last = (k + 2).min(hi);
            for i in lo..=last {
                let u = h[(i, k)];
                let v = h[(i, k + 1)];
                h[(i, k)] = u * c + v * s.conj();
                h[(i, k + 1)] = -u * s + v * c;
            }
        }
        for k in lo..=hi {
            h[(k, k)] += shift;
        }
    }
    Ok(eigs)
}
