//! Seeded instance generators. Every generator is a pure function of its
//! parameters and seed.

use std::fmt;
use std::str::FromStr;

use qpaccel::{CscMatrix, QpProblem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kind {
    RandomQp,
    EqualityQp,
    MpcToy,
    Lasso,
    Huber,
}

impl Kind {
    pub const ALL: [Kind; 5] = [
        Kind::RandomQp,
        Kind::EqualityQp,
        Kind::MpcToy,
        Kind::Lasso,
        Kind::Huber,
    ];
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::RandomQp => "random_qp",
            Kind::EqualityQp => "equality_qp",
            Kind::MpcToy => "mpc_toy",
            Kind::Lasso => "lasso",
            Kind::Huber => "huber",
        })
    }
}

impl FromStr for Kind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Kind::ALL
            .into_iter()
            .find(|k| k.to_string() == s)
            .ok_or_else(|| format!("unknown kind {s:?}"))
    }
}

/// Generator parameters. Fields a kind does not use are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct GenSpec {
    pub kind: Kind,
    pub seed: u64,
    /// Variables (random_qp, equality_qp).
    pub n: usize,
    /// Constraint rows (random_qp) or equality rows (equality_qp).
    pub m: usize,
    /// Nonzero fraction of random factors.
    pub density: f64,
    /// mpc_toy horizon.
    pub horizon: usize,
    /// lasso / huber.
    pub features: usize,
    pub samples: usize,
    /// Lasso weight; defaults to a fifth of the zero-solution threshold.
    pub lambda: Option<f64>,
    /// Huber threshold.
    pub huber_m: f64,
}

impl GenSpec {
    pub fn new(kind: Kind, seed: u64) -> Self {
        GenSpec {
            kind,
            seed,
            n: 20,
            m: if kind == Kind::EqualityQp { 10 } else { 30 },
            density: 0.15,
            horizon: 20,
            features: 20,
            samples: 40,
            lambda: None,
            huber_m: 1.0,
        }
    }

    pub fn label(&self) -> String {
        match self.kind {
            Kind::RandomQp | Kind::EqualityQp => {
                format!("{}_n{}_m{}_s{}", self.kind, self.n, self.m, self.seed)
            }
            Kind::MpcToy => format!("{}_N{}_s{}", self.kind, self.horizon, self.seed),
            Kind::Lasso | Kind::Huber => format!(
                "{}_f{}_k{}_s{}",
                self.kind, self.features, self.samples, self.seed
            ),
        }
    }

    pub fn generate(&self) -> QpProblem {
        assert!(
            self.n >= 1 && self.horizon >= 1 && self.features >= 1 && self.samples >= 1,
            "sizes must be positive"
        );
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        match self.kind {
            Kind::RandomQp => random_qp(&mut rng, self.n, self.m, self.density),
            Kind::EqualityQp => equality_qp(&mut rng, self.n, self.m),
            Kind::MpcToy => mpc_toy(&mut rng, self.horizon),
            Kind::Lasso => lasso(
                &mut rng,
                self.features,
                self.samples,
                self.density,
                self.lambda,
            ),
            Kind::Huber => huber(
                &mut rng,
                self.features,
                self.samples,
                self.density,
                self.huber_m,
            ),
        }
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Random sparse rows x cols triplets with at least one entry per row.
fn sparse_gaussian(
    rng: &mut ChaCha8Rng,
    rows: usize,
    cols: usize,
    density: f64,
) -> Vec<(usize, usize, f64)> {
    let mut trips = Vec::new();
    for i in 0..rows {
        let start = trips.len();
        for j in 0..cols {
            if rng.random::<f64>() < density {
                trips.push((i, j, normal(rng)));
            }
        }
        if trips.len() == start {
            let j = rng.random_range(0..cols);
            trips.push((i, j, normal(rng)));
        }
    }
    trips
}

/// Upper triangle of BᵀB + reg·I for sparse B given by triplets.
fn gram_plus_diag(n: usize, b: &[(usize, usize, f64)], reg: f64) -> CscMatrix {
    let rows = b.iter().map(|t| t.0 + 1).max().unwrap_or(0);
    let mut by_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); rows];
    for &(i, j, v) in b {
        by_row[i].push((j, v));
    }
    let mut trips = Vec::new();
    for row in &by_row {
        for &(j1, v1) in row {
            for &(j2, v2) in row {
                if j1 <= j2 {
                    trips.push((j1, j2, v1 * v2));
                }
            }
        }
    }
    for j in 0..n {
        trips.push((j, j, reg));
    }
    CscMatrix::from_triplets(n, n, &trips).expect("in range")
}

fn matvec(rows: usize, trips: &[(usize, usize, f64)], x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; rows];
    for &(i, j, v) in trips {
        out[i] += v * x[j];
    }
    out
}

/// P = BᵀB + 1e-2·I, all rows inequalities, b = A x₀ + positive slack.
fn random_qp(rng: &mut ChaCha8Rng, n: usize, m: usize, density: f64) -> QpProblem {
    let b_trips = sparse_gaussian(rng, n, n, density);
    let p = gram_plus_diag(n, &b_trips, 1e-2);
    let c: Vec<f64> = (0..n).map(|_| normal(rng)).collect();
    let a_trips = sparse_gaussian(rng, m, n, density);
    let x0: Vec<f64> = (0..n).map(|_| normal(rng)).collect();
    let b: Vec<f64> = matvec(m, &a_trips, &x0)
        .into_iter()
        .map(|v| v + rng.random_range(0.1..1.0))
        .collect();
    let a = CscMatrix::from_triplets(m, n, &a_trips).expect("in range");
    QpProblem::new(p, c, a, b, m, 0).expect("consistent dimensions")
}

/// P = BᵀB + 0.1·I with dense Gaussian equality rows, b = A x₀.
fn equality_qp(rng: &mut ChaCha8Rng, n: usize, m2: usize) -> QpProblem {
    assert!(m2 < n, "equality_qp needs fewer rows than variables");
    let b_trips = sparse_gaussian(rng, n, n, 0.5);
    let p = gram_plus_diag(n, &b_trips, 0.1);
    let c: Vec<f64> = (0..n).map(|_| normal(rng)).collect();
    let a_trips: Vec<_> = (0..m2)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| (i, j, normal(rng)))
        .collect();
    let x0: Vec<f64> = (0..n).map(|_| normal(rng)).collect();
    let b = matvec(m2, &a_trips, &x0);
    let a = CscMatrix::from_triplets(m2, n, &a_trips).expect("in range");
    QpProblem::new(p, c, a, b, 0, m2).expect("consistent dimensions")
}

/// Condensed double-integrator MPC: inputs u_0..u_{N−1}, states eliminated.
/// Stage cost xᵀdiag(1, 0.1)x + 0.1u², bounds |u| ≤ 0.5, |p| ≤ 5, |v| ≤ 1.
fn mpc_toy(rng: &mut ChaCha8Rng, horizon: usize) -> QpProblem {
    const DT: f64 = 0.1;
    const Q: [f64; 2] = [1.0, 0.1];
    const R: f64 = 0.1;
    const U_MAX: f64 = 0.5;
    const X_MAX: [f64; 2] = [5.0, 1.0];
    let nn = horizon;
    let x0 = [rng.random_range(-1.0..1.0), rng.random_range(-0.5..0.5)];

    // x_t = Φ_t x0 + Σ_{s<t} Γ_{t,s} u_s for t = 1..N
    // with Φ_t = [[1, tΔ], [0, 1]] and Γ_{t,s} = ((t−s−½)Δ², Δ)
    let free = |t: usize| [x0[0] + t as f64 * DT * x0[1], x0[1]];
    let gamma = |t: usize, s: usize| [(t - s) as f64 * DT * DT - 0.5 * DT * DT, DT];

    let mut p = vec![vec![0.0; nn]; nn];
    let mut c = vec![0.0; nn];
    for t in 1..=nn {
        let xf = free(t);
        for s1 in 0..t {
            let g1 = gamma(t, s1);
            for k in 0..2 {
                c[s1] += 2.0 * Q[k] * g1[k] * xf[k];
            }
            for s2 in s1..t {
                let g2 = gamma(t, s2);
                p[s1][s2] += 2.0 * (Q[0] * g1[0] * g2[0] + Q[1] * g1[1] * g2[1]);
            }
        }
    }
    let mut p_trips = Vec::new();
    for (i, row) in p.iter().enumerate() {
        for (j, &v) in row.iter().enumerate().skip(i) {
            let v = if i == j { v + 2.0 * R } else { v };
            if v != 0.0 {
                p_trips.push((i, j, v));
            }
        }
    }

    let mut a_trips = Vec::new();
    let mut b = Vec::new();
    let mut row = 0;
    for s in 0..nn {
        a_trips.push((row, s, 1.0));
        a_trips.push((row + 1, s, -1.0));
        b.extend([U_MAX, U_MAX]);
        row += 2;
    }
    for t in 1..=nn {
        let xf = free(t);
        for k in 0..2 {
            for s in 0..t {
                let g = gamma(t, s)[k];
                a_trips.push((row, s, g));
                a_trips.push((row + 1, s, -g));
            }
            b.push(X_MAX[k] - xf[k]);
            b.push(X_MAX[k] + xf[k]);
            row += 2;
        }
    }
    QpProblem::new(
        CscMatrix::from_triplets(nn, nn, &p_trips).expect("in range"),
        c,
        CscMatrix::from_triplets(row, nn, &a_trips).expect("in range"),
        b,
        row,
        0,
    )
    .expect("consistent dimensions")
}

/// Lasso data matrix D (samples × features) and targets t.
fn regression_data(
    rng: &mut ChaCha8Rng,
    features: usize,
    samples: usize,
    density: f64,
    outliers: bool,
) -> (Vec<(usize, usize, f64)>, Vec<f64>) {
    let d = sparse_gaussian(rng, samples, features, density);
    let truth: Vec<f64> = (0..features)
        .map(|_| {
            if rng.random::<f64>() < 0.5 {
                normal(rng) / (features as f64).sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let mut t = matvec(samples, &d, &truth);
    for v in &mut t {
        *v += normal(rng) * 0.1;
        if outliers && rng.random::<f64>() < 0.05 {
            *v += normal(rng) * 10.0;
        }
    }
    (d, t)
}

/// Variables (x, y, s): ½‖y‖² + λ·1ᵀs with x − s ≤ 0, −x − s ≤ 0, Dx − y = t.
fn lasso(
    rng: &mut ChaCha8Rng,
    features: usize,
    samples: usize,
    density: f64,
    lambda: Option<f64>,
) -> QpProblem {
    let (d, t) = regression_data(rng, features, samples, density, false);
    let lambda = lambda.unwrap_or_else(|| {
        let mut dt = vec![0.0; features];
        for &(i, j, v) in &d {
            dt[j] += v * t[i];
        }
        0.2 * dt.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    });
    let (f, k) = (features, samples);
    let n = 2 * f + k;
    let (xo, yo, so) = (0, f, f + k);
    let p = CscMatrix::from_triplets(
        n,
        n,
        &(0..k).map(|i| (yo + i, yo + i, 1.0)).collect::<Vec<_>>(),
    )
    .expect("in range");
    let mut c = vec![0.0; n];
    c[so..].fill(lambda);
    let mut a = Vec::new();
    for j in 0..f {
        a.extend([(j, xo + j, 1.0), (j, so + j, -1.0)]);
        a.extend([(f + j, xo + j, -1.0), (f + j, so + j, -1.0)]);
    }
    let eq0 = 2 * f;
    for &(i, j, v) in &d {
        a.push((eq0 + i, xo + j, v));
    }
    for i in 0..k {
        a.push((eq0 + i, yo + i, -1.0));
    }
    let mut b = vec![0.0; 2 * f];
    b.extend_from_slice(&t);
    QpProblem::new(
        p,
        c,
        CscMatrix::from_triplets(2 * f + k, n, &a).expect("in range"),
        b,
        2 * f,
        k,
    )
    .expect("consistent dimensions")
}

/// Variables (x, u, r, s): ½‖u‖² + M·1ᵀ(r + s) with r, s ≥ 0 and
/// Dx − u − r + s = t, i.e. Huber regression with threshold M.
fn huber(
    rng: &mut ChaCha8Rng,
    features: usize,
    samples: usize,
    density: f64,
    huber_m: f64,
) -> QpProblem {
    let (d, t) = regression_data(rng, features, samples, density, true);
    let (f, k) = (features, samples);
    let n = f + 3 * k;
    let (xo, uo, ro, so) = (0, f, f + k, f + 2 * k);
    let p = CscMatrix::from_triplets(
        n,
        n,
        &(0..k).map(|i| (uo + i, uo + i, 1.0)).collect::<Vec<_>>(),
    )
    .expect("in range");
    let mut c = vec![0.0; n];
    c[ro..].fill(huber_m);
    let mut a = Vec::new();
    for i in 0..k {
        a.push((i, ro + i, -1.0));
        a.push((k + i, so + i, -1.0));
    }
    let eq0 = 2 * k;
    for &(i, j, v) in &d {
        a.push((eq0 + i, xo + j, v));
    }
    for i in 0..k {
        a.extend([
            (eq0 + i, uo + i, -1.0),
            (eq0 + i, ro + i, -1.0),
            (eq0 + i, so + i, 1.0),
        ]);
    }
    let mut b = vec![0.0; 2 * k];
    b.extend_from_slice(&t);
    QpProblem::new(
        p,
        c,
        CscMatrix::from_triplets(3 * k, n, &a).expect("in range"),
        b,
        2 * k,
        k,
    )
    .expect("consistent dimensions")
}

/// The 40-instance default suite: 20 random_qp, then 5 each of equality_qp,
/// mpc_toy, lasso and huber, all with n + m ≤ 600.
pub fn default_suite() -> Vec<GenSpec> {
    let mut out = Vec::new();
    for i in 0..20u64 {
        let mut s = GenSpec::new(Kind::RandomQp, 1000 + i);
        s.n = 20 + 10 * (i as usize % 8);
        s.m = s.n + s.n / 2;
        out.push(s);
    }
    for i in 0..5u64 {
        let mut s = GenSpec::new(Kind::EqualityQp, 2000 + i);
        s.n = 30 + 20 * i as usize;
        s.m = s.n / 2;
        out.push(s);
    }
    for i in 0..5u64 {
        let mut s = GenSpec::new(Kind::MpcToy, 3000 + i);
        s.horizon = 20 + 5 * i as usize;
        out.push(s);
    }
    for i in 0..5u64 {
        let mut s = GenSpec::new(Kind::Lasso, 4000 + i);
        s.features = 10 + 10 * i as usize;
        s.samples = 2 * s.features;
        out.push(s);
    }
    for i in 0..5u64 {
        let mut s = GenSpec::new(Kind::Huber, 5000 + i);
        s.features = 10 + 5 * i as usize;
        s.samples = 40 + 10 * i as usize;
        out.push(s);
    }
    out
}
