//! Dolan–Moré relative performance profiles.

/// Ratios `u[p][s] = t[p][s] / min_s t[p][s]` (∞ for failures) and the
/// solved-problem count used as the profile denominator.
#[derive(Debug, Clone, PartialEq)]
pub struct PerfProfile {
    pub ratios: Vec<Vec<f64>>,
    pub n_solved: usize,
}

impl PerfProfile {
    /// `times[p][s]` is the budget solver s needed on problem p; non-finite
    /// entries mark failures. Problems no solver solved are left out of the
    /// denominator.
    pub fn new(times: &[Vec<f64>]) -> Self {
        let mut ratios = Vec::with_capacity(times.len());
        let mut n_solved = 0;
        for row in times {
            let best = row
                .iter()
                .copied()
                .filter(|t| t.is_finite())
                .fold(f64::INFINITY, f64::min);
            if best.is_finite() {
                n_solved += 1;
            }
            ratios.push(
                row.iter()
                    .map(|&t| {
                        if t.is_finite() && best.is_finite() {
                            if best > 0.0 {
                                t / best
                            } else if t == 0.0 {
                                1.0
                            } else {
                                f64::INFINITY
                            }
                        } else {
                            f64::INFINITY
                        }
                    })
                    .collect(),
            );
        }
        PerfProfile { ratios, n_solved }
    }

    pub fn num_solvers(&self) -> usize {
        self.ratios.first().map_or(0, |r| r.len())
    }

    /// Fraction of solved problems on which `solver` is within a factor τ of
    /// the best.
    pub fn fraction(&self, solver: usize, tau: f64) -> f64 {
        if self.n_solved == 0 {
            return 0.0;
        }
        let hits = self.ratios.iter().filter(|r| r[solver] <= tau).count();
        hits as f64 / self.n_solved as f64
    }

    /// Largest finite ratio, at least 1.
    pub fn max_ratio(&self) -> f64 {
        self.ratios
            .iter()
            .flatten()
            .copied()
            .filter(|r| r.is_finite())
            .fold(1.0, f64::max)
    }

    /// `points` log-spaced values from 1 to just past the largest ratio.
    pub fn tau_grid(&self, points: usize) -> Vec<f64> {
        let points = points.max(2);
        let hi = (self.max_ratio() * 1.05).ln();
        (0..points)
            .map(|i| (hi * i as f64 / (points - 1) as f64).exp())
            .collect()
    }

    /// Rows `(τ, P_1(τ), …, P_S(τ))` over [`Self::tau_grid`].
    pub fn sample(&self, points: usize) -> Vec<Vec<f64>> {
        self.tau_grid(points)
            .into_iter()
            .map(|tau| {
                let mut row = vec![tau];
                row.extend((0..self.num_solvers()).map(|s| self.fraction(s, tau)));
                row
            })
            .collect()
    }
}
