use crate::error::{Error, Result};
use crate::linalg::{self, c, ComplexMatrix, ComplexVector, RANK_TOL, ZERO};
use crate::rng::RngSeed;
use crate::space::TensorSpace;

use super::{ChainState, PureState, SiteState, Topology};

/// Tolerance for the trace-preserving and unital checks.
pub const CHANNEL_TOL: f64 = 1e-10;

/// Largest dense expansion we are willing to build, in qubits.
const DENSE_LOG2_BUDGET: f64 = 20.0;

/// Kraus representation `X -> sum_k A_k X A_k^dagger` with verified flags.
#[derive(Debug, Clone)]
pub struct QuantumChannel {
    kraus: Vec<ComplexMatrix>,
    dim: usize,
    tp_residual: f64,
    unital_residual: f64,
}

impl QuantumChannel {
    pub fn new(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        let first = kraus.first().ok_or(Error::ZeroDimension)?;
        let dim = first.nrows();
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        for k in &kraus {
            if k.nrows() != dim || k.ncols() != dim {
                return Err(Error::DimensionMismatch(k.nrows(), dim));
            }
        }
        let mut tp = ComplexMatrix::zeros(dim, dim);
        let mut un = ComplexMatrix::zeros(dim, dim);
        for k in &kraus {
            tp += k.adjoint() * k;
            un += k * k.adjoint();
        }
        Ok(Self {
            kraus,
            dim,
            tp_residual: linalg::identity_residual(&tp),
            unital_residual: linalg::identity_residual(&un),
        })
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_trace_preserving(&self) -> bool {
        self.tp_residual <= CHANNEL_TOL
    }

    pub fn is_unital(&self) -> bool {
        self.unital_residual <= CHANNEL_TOL
    }

    pub fn require_unital(&self) -> Result<()> {
        if self.is_unital() {
            Ok(())
        } else {
            Err(Error::NotUnital(self.unital_residual))
        }
    }

    pub fn require_trace_preserving(&self) -> Result<()> {
        if self.is_trace_preserving() {
            Ok(())
        } else {
            Err(Error::NotTracePreserving(self.tp_residual))
        }
    }

    pub fn apply(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.dim, self.dim);
        for k in &self.kraus {
            out += k * x * k.adjoint();
        }
        out
    }

    pub fn apply_power(&self, x: &ComplexMatrix, l: usize) -> ComplexMatrix {
        (0..l).fold(x.clone(), |acc, _| self.apply(&acc))
    }

    /// `sum_k A_k (x) conj(A_k)`, the matrix of the channel acting on
    /// row-major vectorized operators.
    pub fn transfer_matrix(&self) -> ComplexMatrix {
        let d2 = self.dim * self.dim;
        let mut t = ComplexMatrix::zeros(d2, d2);
        for k in &self.kraus {
            t += linalg::kron(k, &k.map(|z| z.conj()));
        }
        t
    }
}

/// Site tensors `A^{[i]}_s` (one matrix per physical index) with trace
/// closure. Open boundary conditions are the special case of 1x1 outer bonds.
#[derive(Debug, Clone)]
pub struct MatrixProductState {
    sites: Vec<Vec<ComplexMatrix>>,
    phys_dim: usize,
    translation_invariant: bool,
}

impl MatrixProductState {
    pub fn new(sites: Vec<Vec<ComplexMatrix>>) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::InvalidState("an MPS needs at least one site".into()));
        }
        let d = sites[0].len();
        if d == 0 {
            return Err(Error::ZeroDimension);
        }
        for (i, site) in sites.iter().enumerate() {
            if site.len() != d {
                return Err(Error::DimensionMismatch(site.len(), d));
            }
            let (r, cdim) = site[0].shape();
            if site.iter().any(|m| m.shape() != (r, cdim)) {
                return Err(Error::InvalidState(format!("ragged tensor at site {i}")));
            }
            let next = &sites[(i + 1) % sites.len()][0];
            if cdim != next.nrows() {
                return Err(Error::InvalidState(format!("bond mismatch after site {i}: {cdim} vs {}", next.nrows())));
            }
        }
        Ok(Self { sites, phys_dim: d, translation_invariant: false })
    }

    /// The same tensor on every site.
    pub fn translation_invariant(tensor: Vec<ComplexMatrix>, n: usize) -> Result<Self> {
        let mut mps = Self::new(vec![tensor; n])?;
        if mps.sites[0][0].nrows() != mps.sites[0][0].ncols() {
            return Err(Error::InvalidState("translation-invariant tensors must be square".into()));
        }
        mps.translation_invariant = true;
        Ok(mps)
    }

    pub fn num_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn phys_dim(&self) -> usize {
        self.phys_dim
    }

    pub fn is_translation_invariant(&self) -> bool {
        self.translation_invariant
    }

    pub fn site(&self, i: usize) -> &[ComplexMatrix] {
        &self.sites[i]
    }

    /// Largest bond dimension.
    pub fn bond_dim(&self) -> usize {
        self.sites.iter().map(|s| s[0].nrows().max(s[0].ncols())).max().unwrap_or(1)
    }

    /// Channel defined by the tensors of site `i` (square tensors only).
    pub fn channel(&self, i: usize) -> Result<QuantumChannel> {
        QuantumChannel::new(self.sites[i].clone())
    }

    /// `tr(A_{i_1} ... A_{i_n})`, contracted directly.
    pub fn coefficient(&self, indices: &[usize]) -> Result<linalg::C64> {
        if indices.len() != self.num_sites() {
            return Err(Error::DimensionMismatch(indices.len(), self.num_sites()));
        }
        let mut acc = self.sites[0][indices[0]].clone();
        for (site, &s) in self.sites.iter().zip(indices).skip(1) {
            if s >= self.phys_dim {
                return Err(Error::OutOfRange(format!("physical index {s}")));
            }
            acc *= &site[s];
        }
        Ok(linalg::trace(&acc))
    }

    fn check_dense_budget(&self, extra: f64) -> Result<()> {
        let bits = self.num_sites() as f64 * (self.phys_dim as f64).log2() + extra;
        if bits > DENSE_LOG2_BUDGET + 1e-9 {
            return Err(Error::DimensionBudget(format!("dense expansion of {bits:.1} qubits")));
        }
        Ok(())
    }

    /// Row vectors `<a| A_{i_1} ... A_{i_n}` for every physical string, laid
    /// out as `[string][b]`.
    fn open_rows(&self, a: usize) -> Vec<linalg::C64> {
        let d = self.phys_dim;
        let mut width = self.sites[0][0].nrows();
        let mut rows = vec![ZERO; width];
        rows[a] = c(1.0, 0.0);
        let mut count = 1usize;
        for site in &self.sites {
            let next_width = site[0].ncols();
            let mut next = vec![ZERO; count * d * next_width];
            for p in 0..count {
                let v = &rows[p * width..(p + 1) * width];
                for (s, m) in site.iter().enumerate() {
                    let out = &mut next[(p * d + s) * next_width..(p * d + s + 1) * next_width];
                    for (k, &vk) in v.iter().enumerate() {
                        if vk == ZERO {
                            continue;
                        }
                        for (col, o) in out.iter_mut().enumerate() {
                            *o += vk * m[(k, col)];
                        }
                    }
                }
            }
            rows = next;
            width = next_width;
            count *= d;
        }
        rows
    }

    /// Unnormalized trace-closure coefficients in the computational basis.
    pub fn dense_raw(&self) -> Result<ComplexVector> {
        self.check_dense_budget(0.0)?;
        let d0 = self.sites[0][0].nrows();
        let total = self.phys_dim.pow(self.num_sites() as u32);
        let mut out = ComplexVector::from_element(total, ZERO);
        for a in 0..d0 {
            let rows = self.open_rows(a);
            for p in 0..total {
                out[p] += rows[p * d0 + a];
            }
        }
        Ok(out)
    }

    /// Normalized dense state plus the norm of the raw coefficients.
    pub fn to_chain_state(&self, topology: Topology) -> Result<(ChainState, f64)> {
        let raw = self.dense_raw()?;
        let norm = raw.norm();
        let state = ChainState::normalized(raw, self.num_sites(), self.phys_dim, topology)?;
        Ok((state, norm))
    }

    /// Open chain whose outer virtual legs are kept as two extra factors:
    /// amplitudes `<a| A_{i_1} ... A_{i_n} |b>` on `[D_left, d, ..., d, D_right]`,
    /// normalized. Tracing out the legs gives the physical chain with
    /// maximally mixed boundary conditions.
    pub fn open_boundary_state(&self) -> Result<PureState> {
        let dl = self.sites[0][0].nrows();
        let dr = self.sites[self.num_sites() - 1][0].ncols();
        self.check_dense_budget(((dl * dr) as f64).log2())?;
        let total = self.phys_dim.pow(self.num_sites() as u32);
        let mut amps = Vec::with_capacity(dl * total * dr);
        for a in 0..dl {
            amps.extend(self.open_rows(a));
        }
        let mut dims = vec![dl];
        dims.extend(std::iter::repeat_n(self.phys_dim, self.num_sites()));
        dims.push(dr);
        PureState::normalized(ComplexVector::from_vec(amps), TensorSpace::new(dims)?)
    }
}

/// A sampled quantum expander state: tensors `U_i / sqrt(d)` with `U_i`
/// independent Haar unitaries.
#[derive(Debug, Clone)]
pub struct ExpanderSample {
    pub mps: MatrixProductState,
    pub channel: QuantumChannel,
    /// Normalized dense ring state, when it fits the dense budget.
    pub state: Option<ChainState>,
    /// Norm of the raw `tr(A...A)` coefficients before normalization.
    pub raw_norm: Option<f64>,
}

pub fn expander_state(d: usize, bond: usize, n: usize, seed: RngSeed) -> Result<ExpanderSample> {
    if d == 0 || bond == 0 {
        return Err(Error::ZeroDimension);
    }
    if n < 2 {
        return Err(Error::InvalidState(format!("expander state needs n >= 2, got {n}")));
    }
    let dense = n as f64 * (d as f64).log2() <= DENSE_LOG2_BUDGET;
    let mut last_err = Error::ZeroNorm;
    for attempt in 0..2u64 {
        let mut rng = seed.fork(attempt).rng();
        let scale = c(1.0 / (d as f64).sqrt(), 0.0);
        let kraus =
            (0..d).map(|_| linalg::haar_unitary_with(bond, &mut rng).map(|u| u * scale)).collect::<Result<Vec<_>>>()?;
        let channel = QuantumChannel::new(kraus.clone())?;
        channel.require_trace_preserving()?;
        channel.require_unital()?;
        let mps = MatrixProductState::translation_invariant(kraus, n)?;
        if !dense {
            return Ok(ExpanderSample { mps, channel, state: None, raw_norm: None });
        }
        match mps.to_chain_state(Topology::Ring) {
            Ok((state, norm)) => return Ok(ExpanderSample { mps, channel, state: Some(state), raw_norm: Some(norm) }),
            Err(e) => last_err = e,
        }
    }
    Err(last_err)
}

/// Spin-1 AKLT tensors (D = 2, d = 3) on `n` sites.
pub fn aklt_mps(n: usize) -> Result<MatrixProductState> {
    let a = (2.0f64 / 3.0).sqrt();
    let b = (1.0f64 / 3.0).sqrt();
    let plus = ComplexMatrix::from_row_slice(2, 2, &[ZERO, c(a, 0.0), ZERO, ZERO]);
    let zero = ComplexMatrix::from_row_slice(2, 2, &[c(-b, 0.0), ZERO, ZERO, c(b, 0.0)]);
    let minus = ComplexMatrix::from_row_slice(2, 2, &[ZERO, ZERO, c(-a, 0.0), ZERO]);
    MatrixProductState::translation_invariant(vec![plus, zero, minus], n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PurityMode {
    /// `(1/D^2) sum_ij tr(L^l(|i><j|) L^l(|j><i|))`.
    Channel,
    /// `tr(rho_l^2)` of the dense `l`-site state with maximally mixed
    /// virtual boundary.
    Dense,
}

/// Purity of the `l`-site reduced state of the expander state built from
/// `ch`.
pub fn expander_purity(ch: &QuantumChannel, l: usize, mode: PurityMode) -> Result<f64> {
    ch.require_unital()?;
    ch.require_trace_preserving()?;
    if l == 0 {
        return Err(Error::OutOfRange("block length must be >= 1".into()));
    }
    match mode {
        PurityMode::Channel => {
            let dim = ch.dim();
            let mut sum = 0.0;
            for i in 0..dim {
                for j in 0..dim {
                    let mut eij = ComplexMatrix::zeros(dim, dim);
                    eij[(i, j)] = c(1.0, 0.0);
                    let mut eji = ComplexMatrix::zeros(dim, dim);
                    eji[(j, i)] = c(1.0, 0.0);
                    let x = ch.apply_power(&eij, l);
                    let y = ch.apply_power(&eji, l);
                    sum += linalg::trace(&(x * y)).re;
                }
            }
            Ok(sum / (dim * dim) as f64)
        }
        PurityMode::Dense => expander_purity_dense(ch, l),
    }
}

/// Dense companion of [`expander_purity`]: builds the open `l`-site chain
/// with its virtual legs, traces the legs out and takes the purity.
pub fn expander_purity_dense(ch: &QuantumChannel, l: usize) -> Result<f64> {
    if l == 0 {
        return Err(Error::OutOfRange("block length must be >= 1".into()));
    }
    let psi = MatrixProductState::new(vec![ch.kraus().to_vec(); l])?.open_boundary_state()?;
    let phys: Vec<usize> = (1..=l).collect();
    Ok(psi.reduced(&phys)?.purity())
}

/// Output of [`mps_truncate`].
#[derive(Debug, Clone)]
pub struct TruncationResult {
    pub mps: MatrixProductState,
    pub max_bond: usize,
    pub fidelity: f64,
}

/// Sequential SVD sweep with per-cut truncation. The discarded-weight budget
/// per cut is halved until the exact overlap reaches `target_fidelity`.
pub fn mps_truncate(state: &ChainState, target_fidelity: f64) -> Result<TruncationResult> {
    if !(0.0..=1.0).contains(&target_fidelity) {
        return Err(Error::OutOfRange(format!("target fidelity {target_fidelity}")));
    }
    if state.dense_log_dim() > DENSE_LOG2_BUDGET + 1e-9 {
        return Err(Error::DimensionBudget("state too large for the dense sweep".into()));
    }
    let n = state.num_sites();
    let mut budget = 2.0 * (1.0 - target_fidelity) / (n - 1) as f64;
    loop {
        let (mps, max_bond) = sweep(state, budget)?;
        let approx = mps.dense_raw()?;
        let norm = approx.norm();
        let fidelity = if norm > 0.0 { state.amplitudes().dotc(&approx).norm() / norm } else { 0.0 };
        if fidelity >= target_fidelity - 1e-12 || budget == 0.0 {
            return Ok(TruncationResult { mps, max_bond, fidelity });
        }
        budget = if budget < 1e-18 { 0.0 } else { budget / 2.0 };
    }
}

fn sweep(state: &ChainState, budget: f64) -> Result<(MatrixProductState, usize)> {
    let n = state.num_sites();
    let d = state.site_dim();
    let mut rest = state.amplitudes().len();
    let mut left = 1usize;
    // remainder as a (left * d) x (rest / d) matrix, row-major flat index
    let mut rem = ComplexMatrix::from_fn(d, rest / d, |r, col| state.amplitudes()[r * (rest / d) + col]);
    let mut sites = Vec::with_capacity(n);
    let mut max_bond = 1;
    for _ in 0..n - 1 {
        let svd = linalg::svd(&rem);
        let u = svd.u;
        let vt = svd.v.adjoint();
        let sv = svd.values;
        let order: Vec<usize> = (0..sv.len()).collect();
        let total: f64 = sv.iter().map(|s| s * s).sum();
        let floor = RANK_TOL * sv.iter().cloned().fold(0.0, f64::max);
        let mut keep = 0;
        let mut discarded = total;
        while keep < order.len() {
            let s = sv[order[keep]];
            if s <= floor || discarded <= budget * total {
                break;
            }
            discarded -= s * s;
            keep += 1;
        }
        let keep = keep.max(1);
        max_bond = max_bond.max(keep);
        let tensor: Vec<ComplexMatrix> =
            (0..d).map(|s| ComplexMatrix::from_fn(left, keep, |a, b| u[(a * d + s, order[b])])).collect();
        sites.push(tensor);
        rest /= d;
        let next_cols = rest / d;
        let sv_t = ComplexMatrix::from_fn(keep, rest, |b, col| vt[(order[b], col)] * c(sv[order[b]], 0.0));
        // reshape keep x (d * next_cols) into (keep * d) x next_cols
        rem = ComplexMatrix::from_fn(keep * d, next_cols.max(1), |r, col| {
            let (b, s) = (r / d, r % d);
            sv_t[(b, s * next_cols.max(1) + col)]
        });
        left = keep;
    }
    // last site: rem is (left * d) x 1
    let last: Vec<ComplexMatrix> =
        (0..d).map(|s| ComplexMatrix::from_fn(left, 1, |a, _| rem[(a * d + s, 0)])).collect();
    sites.push(last);
    Ok((MatrixProductState::new(sites)?, max_bond))
}
