//! Small fixed-order Gauss–Legendre quadrature helpers shared by the
//! spectrum and wake integrators.

/// 8-point Gauss–Legendre nodes on `[-1, 1]`.
pub(crate) const GL8_NODES: [f64; 8] = [
    -0.960_289_856_497_536_2,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329_0,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];

/// Weights paired with [`GL8_NODES`]; they sum to 2.
pub(crate) const GL8_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_3,
    0.222_381_034_453_374_5,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362_0,
    0.362_683_783_378_362_0,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Integrate `f` over `[a, b]` with a single 8-point panel.
pub(crate) fn gl8_panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = 0.0;
    for (x, w) in GL8_NODES.iter().zip(GL8_WEIGHTS.iter()) {
        acc += w * f(mid + half * x);
    }
    acc * half
}

/// Composite 8-point Gauss–Legendre rule with `panels` equal sub-intervals.
pub(crate) fn gl8_composite<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let n = panels.max(1);
    let h = (b - a) / n as f64;
    let mut acc = 0.0;
    for i in 0..n {
        let lo = a + i as f64 * h;
        acc += gl8_panel(&f, lo, lo + h);
    }
    acc
}
