//! Gauss rules used by the mesh assembly and an adaptive Gauss-Kronrod
//! integrator for the radial tail integrals.

/// 4-point Gauss-Legendre nodes on [-1, 1].
pub const GAUSS4_X: [f64; 4] =
    [-0.861_136_311_594_052_6, -0.339_981_043_584_856_3, 0.339_981_043_584_856_3, 0.861_136_311_594_052_6];

/// 4-point Gauss-Legendre weights on [-1, 1].
pub const GAUSS4_W: [f64; 4] =
    [0.347_854_845_137_453_8, 0.652_145_154_862_546_1, 0.652_145_154_862_546_1, 0.347_854_845_137_453_8];

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Adaptive 7/15-point Gauss-Kronrod quadrature.
///
/// Returns `(integral, error_estimate)`. The interval is bisected until the
/// summed error estimate is below `max(abs_tol, rel_tol * |integral|)` or the
/// subdivision budget is exhausted.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> (f64, f64) {
    if a == b {
        return (0.0, 0.0);
    }
    let mut segs: Vec<(f64, f64, f64, f64)> = Vec::with_capacity(64);
    let (v, e) = gk15(&f, a, b);
    segs.push((a, b, v, e));
    let mut total = v;
    let mut err = e;
    for _ in 0..2000 {
        if err <= abs_tol.max(rel_tol * total.abs()) {
            break;
        }
        let (idx, _) = segs.iter().enumerate().fold((0, -1.0), |acc, (i, s)| if s.3 > acc.1 { (i, s.3) } else { acc });
        let (sa, sb, sv, se) = segs.swap_remove(idx);
        let mid = 0.5 * (sa + sb);
        let (v1, e1) = gk15(&f, sa, mid);
        let (v2, e2) = gk15(&f, mid, sb);
        total += v1 + v2 - sv;
        err += e1 + e2 - se;
        segs.push((sa, mid, v1, e1));
        segs.push((mid, sb, v2, e2));
    }
    // Re-sum to shed accumulated cancellation from the running updates.
    let total: f64 = segs.iter().map(|s| s.2).sum();
    let err: f64 = segs.iter().map(|s| s.3).sum();
    (total, err)
}

/// Composite 4-point Gauss rule with `n` equal panels.
pub fn gauss4_composite<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = 0.0;
    for k in 0..n {
        let c = a + (k as f64 + 0.5) * h;
        for q in 0..4 {
            s += GAUSS4_W[q] * f(c + 0.5 * h * GAUSS4_X[q]);
        }
    }
    0.5 * h * s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss4_is_exact_for_degree_seven() {
        let v = gauss4_composite(|x| x.powi(7) + 3.0 * x.powi(6), 0.0, 1.0, 1);
        assert!((v - (1.0 / 8.0 + 3.0 / 7.0)).abs() < 1e-15);
    }

    #[test]
    fn adaptive_handles_peaked_integrands() {
        let (v, _) = integrate(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, 1e-13, 0.0);
        let exact = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert!((v - exact).abs() / exact < 1e-11);
    }
}
