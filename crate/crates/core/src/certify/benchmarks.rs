use crate::lmikit::RegularityClass;

use super::ProblemClasses;

fn cls(m: f64, l: f64) -> RegularityClass {
    if l.is_finite() {
        RegularityClass::smooth(m, l).expect("valid benchmark class")
    } else {
        RegularityClass::nonsmooth(m).expect("valid benchmark class")
    }
}

/// Six reference class triples used to exercise the linear-rate
/// certificates, labelled `a` to `f`. Unlisted functions default to
/// `F(0, ∞)`.
pub fn benchmark_sets() -> Vec<(&'static str, ProblemClasses)> {
    let inf = f64::INFINITY;
    vec![
        (
            "a",
            ProblemClasses::new(cls(1.0, 100.0 / 7.0), cls(4.0, 50.0), cls(0.0, 1.0 / 9.0)),
        ),
        (
            "b",
            ProblemClasses::new(cls(1.0, 7.0), cls(0.03, 2.0), cls(0.01, 0.05)),
        ),
        (
            "c",
            ProblemClasses::new(cls(1.0, inf), cls(0.0, 5.0), cls(0.0, 1.0 / 9.0)),
        ),
        (
            "d",
            ProblemClasses::new(cls(0.0, inf), cls(1.0, 10.0), cls(0.0, 20.0)),
        ),
        (
            "e",
            ProblemClasses::new(cls(20.0, 20.0), cls(0.0, inf), cls(0.0, 70.0)),
        ),
        (
            "f",
            ProblemClasses::new(cls(0.0, 50.0), cls(0.0, inf), cls(2.0, 30.0)),
        ),
    ]
}

/// Looks up one of [`benchmark_sets`] by label.
pub fn benchmark(label: &str) -> Option<ProblemClasses> {
    benchmark_sets()
        .into_iter()
        .find(|(l, _)| *l == label)
        .map(|(_, c)| c)
}

/// `n` points from `start` to `stop` spaced evenly in `log10`.
pub fn log_grid(start: f64, stop: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![start];
    }
    let (a, b) = (start.log10(), stop.log10());
    (0..n)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certify::check_assumption1;

    #[test]
    fn every_benchmark_satisfies_assumption1() {
        for (label, c) in benchmark_sets() {
            assert!(check_assumption1(&c), "set {label}");
        }
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(1e-3, 10.0, 25);
        assert_eq!(g.len(), 25);
        assert!((g[0] - 1e-3).abs() < 1e-18);
        assert!((g[24] - 10.0).abs() < 1e-12);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }
}
