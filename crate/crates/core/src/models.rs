//! Benchmark instances: the Lorenz equations, a ring of coupled van der Pol
//! oscillators, and a periodic Burgers equation with a reaction term
//! discretized by linear finite elements.

use nalgebra::{DMatrix, DVector};

use crate::albrekht::{PolynomialSystem, QuadraticCost};
use crate::error::{PqrError, Result};

#[derive(Clone, Debug)]
pub struct BenchmarkInstance {
    pub system: PolynomialSystem,
    pub cost: QuadraticCost,
    pub x0: Vec<f64>,
    pub horizon: f64,
    pub label: String,
}

impl BenchmarkInstance {
    pub fn new(system: PolynomialSystem, cost: QuadraticCost, x0: Vec<f64>, horizon: f64, label: impl Into<String>) -> Result<Self> {
        let n = system.n();
        if cost.q().nrows() != n || cost.r().nrows() != system.m() || x0.len() != n {
            return Err(PqrError::DimensionMismatch(format!(
                "n = {n}, m = {}, Q {:?}, R {:?}, x0 of length {}",
                system.m(),
                cost.q().shape(),
                cost.r().shape(),
                x0.len()
            )));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(PqrError::InvalidParameter(format!("horizon must be positive, got {horizon}")));
        }
        Ok(Self { system, cost, x0, horizon, label: label.into() })
    }

    pub fn with_x0(mut self, x0: Vec<f64>) -> Result<Self> {
        if x0.len() != self.system.n() {
            return Err(PqrError::LengthMismatch { expected: self.system.n(), actual: x0.len() });
        }
        self.x0 = x0;
        Ok(self)
    }

    pub fn with_horizon(mut self, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(PqrError::InvalidParameter(format!("horizon must be positive, got {horizon}")));
        }
        self.horizon = horizon;
        Ok(self)
    }

    pub fn with_cost(mut self, cost: QuadraticCost) -> Result<Self> {
        if cost.q().nrows() != self.system.n() || cost.r().nrows() != self.system.m() {
            return Err(PqrError::DimensionMismatch("cost weights do not fit the system".into()));
        }
        self.cost = cost;
        Ok(self)
    }
}

/// Controlled Lorenz system with σ = 10, ρ = 28, β = 8/3, actuated in the
/// first equation.
pub fn lorenz() -> BenchmarkInstance {
    let a = DMatrix::from_row_slice(3, 3, &[-10.0, 10.0, 0.0, 28.0, -1.0, 0.0, 0.0, 0.0, -8.0 / 3.0]);
    let b = DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
    // columns index x⊗x: (i, j) -> 3i + j
    let mut n2 = DMatrix::zeros(3, 9);
    n2[(1, 2)] = -0.5;
    n2[(1, 6)] = -0.5;
    n2[(2, 1)] = 0.5;
    n2[(2, 3)] = 0.5;
    let system = PolynomialSystem::new(a, b).and_then(|s| s.with_term(2, n2)).expect("valid Lorenz data");
    let cost = QuadraticCost::new(DMatrix::identity(3, 3), DMatrix::identity(1, 1)).expect("identity weights");
    BenchmarkInstance::new(system, cost, vec![10.0; 3], 50.0, "lorenz").expect("consistent Lorenz instance")
}

/// Ring of `g` van der Pol oscillators
/// `ÿ_i = −y_i + (1 − y_i²)ẏ_i + (y_{i−1} − 2y_i + y_{i+1})`, indices mod g.
///
/// The state is `[y₁…y_g, ẏ₁…ẏ_g]`; `nodes` are 1-based indices of the
/// oscillators that receive a control input.
pub fn vdp_ring(g: usize, nodes: &[usize], y0: f64) -> Result<BenchmarkInstance> {
    if g < 2 {
        return Err(PqrError::InvalidParameter(format!("ring needs at least 2 oscillators, got {g}")));
    }
    if nodes.is_empty() {
        return Err(PqrError::InvalidParameter("at least one actuated node is required".into()));
    }
    let mut seen = vec![false; g];
    for &node in nodes {
        if node == 0 || node > g {
            return Err(PqrError::InvalidParameter(format!("node index {node} is outside 1..={g}")));
        }
        if std::mem::replace(&mut seen[node - 1], true) {
            return Err(PqrError::InvalidParameter(format!("node {node} listed twice")));
        }
    }
    if !y0.is_finite() {
        return Err(PqrError::NonFinite("y0".into()));
    }
    let n = 2 * g;
    let m = nodes.len();
    let mut a = DMatrix::zeros(n, n);
    for i in 0..g {
        a[(i, g + i)] = 1.0;
        a[(g + i, i)] -= 3.0;
        a[(g + i, (i + g - 1) % g)] += 1.0;
        a[(g + i, (i + 1) % g)] += 1.0;
        a[(g + i, g + i)] = 1.0;
    }
    let mut b = DMatrix::zeros(n, m);
    for (col, &node) in nodes.iter().enumerate() {
        b[(g + node - 1, col)] = 1.0;
    }
    let mut n3 = DMatrix::zeros(n, n * n * n);
    let idx = |i: usize, j: usize, k: usize| (i * n + j) * n + k;
    for i in 0..g {
        let v = g + i;
        for col in [idx(i, i, v), idx(i, v, i), idx(v, i, i)] {
            n3[(v, col)] = -1.0 / 3.0;
        }
    }
    let system = PolynomialSystem::new(a, b)?.with_term(3, n3)?;
    let cost = QuadraticCost::new(DMatrix::identity(n, n), DMatrix::identity(m, m))?;
    let mut x0 = vec![0.0; n];
    x0[..g].fill(y0);
    let label = format!(
        "vdp-g{g}-nodes{}",
        nodes.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(",")
    );
    BenchmarkInstance::new(system, cost, x0, 50.0, label)
}

/// Finite element matrices of the periodic Burgers equation
/// `z_t = εz_xx − zz_x + αz + Σ_k χ_k(x)u_k(t)` on `[0, 1)`.
#[derive(Clone, Debug)]
pub struct BurgersFem {
    pub n_elements: usize,
    pub m: usize,
    pub mass: DMatrix<f64>,
    pub stiffness: DMatrix<f64>,
    /// `n × n²`; row i holds `½∫ z² φ_i′ dx` as a quadratic form in the nodal values.
    pub convection: DMatrix<f64>,
    /// `n × m`; entry (i, k) is `∫ φ_i` over the k-th control patch.
    pub input: DMatrix<f64>,
}

impl BurgersFem {
    pub fn assemble(n_elements: usize, m: usize) -> Result<Self> {
        if n_elements < 3 {
            return Err(PqrError::InvalidParameter(format!("need at least 3 elements, got {n_elements}")));
        }
        if m == 0 {
            return Err(PqrError::InvalidParameter("need at least one control patch".into()));
        }
        let n = n_elements;
        let h = 1.0 / n as f64;
        let me = [[h / 3.0, h / 6.0], [h / 6.0, h / 3.0]];
        let mut mass = DMatrix::zeros(n, n);
        let mut stiffness = DMatrix::zeros(n, n);
        let mut convection = DMatrix::zeros(n, n * n);
        for e in 0..n {
            let nodes = [e, (e + 1) % n];
            for (p, &i) in nodes.iter().enumerate() {
                for (q, &j) in nodes.iter().enumerate() {
                    mass[(i, j)] += me[p][q];
                    stiffness[(i, j)] += if p == q { 1.0 / h } else { -1.0 / h };
                    // φ_L′ = −1/h, φ_R′ = +1/h on this element
                    convection[(nodes[0], i * n + j)] -= 0.5 / h * me[p][q];
                    convection[(nodes[1], i * n + j)] += 0.5 / h * me[p][q];
                }
            }
        }
        let mut input = DMatrix::zeros(n, m);
        for k in 0..m {
            let (lo, hi) = (k as f64 / m as f64, (k + 1) as f64 / m as f64);
            for e in 0..n {
                let (xl, xr) = (e as f64 * h, (e + 1) as f64 * h);
                let (a, b) = (lo.max(xl), hi.min(xr));
                if b <= a {
                    continue;
                }
                // both hat functions are linear here, so the midpoint rule is exact
                let mid = 0.5 * (a + b);
                let phi_r = (mid - xl) / h;
                input[(e, k)] += (b - a) * (1.0 - phi_r);
                input[((e + 1) % n, k)] += (b - a) * phi_r;
            }
        }
        Ok(Self { n_elements, m, mass, stiffness, convection, input })
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_elements).map(|i| i as f64 / self.n_elements as f64).collect()
    }
}

/// `z₀(x) = ½ sin²(2πx)` on `(0, ½)` and zero elsewhere.
pub fn burgers_initial_profile(x: f64) -> f64 {
    if x > 0.0 && x < 0.5 {
        0.5 * (2.0 * std::f64::consts::PI * x).sin().powi(2)
    } else {
        0.0
    }
}

/// Burgers instance in standard form `ẋ = M⁻¹(−εK + αM)x + M⁻¹Ñ₂(x⊗x) + M⁻¹B̃u`
/// with `Q = M`, `R = 10·I` and the nodal interpolant of the initial profile.
pub fn burgers_fem(n_elements: usize, eps: f64, alpha: f64, m: usize) -> Result<BenchmarkInstance> {
    if !(eps > 0.0) || !eps.is_finite() || !alpha.is_finite() {
        return Err(PqrError::InvalidParameter(format!("need eps > 0 and finite alpha, got {eps}, {alpha}")));
    }
    let fem = BurgersFem::assemble(n_elements, m)?;
    let chol = fem
        .mass
        .clone()
        .cholesky()
        .ok_or_else(|| PqrError::NotPositiveDefinite("mass matrix".into()))?;
    let a = chol.solve(&(&fem.stiffness * -eps + &fem.mass * alpha));
    let n2 = chol.solve(&fem.convection);
    let b = chol.solve(&fem.input);
    let system = PolynomialSystem::new(a, b)?.with_term(2, n2)?;
    let cost = QuadraticCost::new(fem.mass.clone(), DMatrix::identity(m, m) * 10.0)?;
    let x0 = fem.nodes().into_iter().map(burgers_initial_profile).collect();
    BenchmarkInstance::new(system, cost, x0, 200.0, format!("burgers-n{n_elements}-m{m}"))
}

/// Nodal values of a function on the periodic mesh with `n` nodes.
pub fn interpolate(n: usize, f: impl Fn(f64) -> f64) -> DVector<f64> {
    DVector::from_fn(n, |i, _| f(i as f64 / n as f64))
}
