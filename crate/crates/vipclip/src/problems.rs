//! Synthetic zoo of affine operators F(z) = Az + b with analytically certified
//! structural constants, plus sample-based probes of the structural
//! assumptions (monotonicity and its star-shaped relaxations).
//!
//! Every instance is affine on purpose: the Lipschitz constant is a spectral
//! norm, quasi-strong monotonicity is an eigenvalue bound on the symmetric
//! part, and the restricted gap function becomes a concave quadratic over a
//! ball that the metrics module can maximize with a certificate.

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::rng::{sample_in_ball, stream_id, substream};
use serde::{Deserialize, Serialize};

/// Affine operator F(z) = Az + b with known solution and certified constants.
///
/// Constant semantics: a `Some` constant is a certificate (the corresponding
/// assumption provably holds on all of R^d with that constant); `None` means
/// the constructor does not certify the property. `qsm_mu = Some(0.0)` is a
/// meaningful certificate (star-monotonicity), which is why the field is an
/// option rather than using zero as a sentinel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProblemDoc", into = "ProblemDoc")]
pub struct AffineProblem {
    matrix: Matrix,
    offset: Vector,
    solution: Vector,
    lipschitz: f64,
    qsm_mu: Option<f64>,
    sc_ell: Option<f64>,
    snc_rho: Option<f64>,
}

/// Wire format: {dim, matrix (row-major), offset, solution, constants{L, mu, ell, rho}}.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemDoc {
    dim: usize,
    matrix: Vec<f64>,
    offset: Vec<f64>,
    solution: Vec<f64>,
    constants: ConstantsDoc,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstantsDoc {
    #[serde(rename = "L")]
    lipschitz: f64,
    mu: Option<f64>,
    ell: Option<f64>,
    rho: Option<f64>,
}

impl From<AffineProblem> for ProblemDoc {
    fn from(p: AffineProblem) -> Self {
        ProblemDoc {
            dim: p.matrix.dim(),
            matrix: p.matrix.row_major().to_vec(),
            offset: p.offset,
            solution: p.solution,
            constants: ConstantsDoc {
                lipschitz: p.lipschitz,
                mu: p.qsm_mu,
                ell: p.sc_ell,
                rho: p.snc_rho,
            },
        }
    }
}

impl TryFrom<ProblemDoc> for AffineProblem {
    type Error = Error;

    fn try_from(doc: ProblemDoc) -> Result<Self> {
        if doc.dim == 0 || doc.dim > MAX_DOC_DIM {
            return Err(Error::InvalidParameter(format!(
                "problem dimension must be in 1..={MAX_DOC_DIM}, got {}",
                doc.dim
            )));
        }
        let matrix = Matrix::from_row_major(doc.dim, doc.matrix)?;
        AffineProblem::from_parts(
            matrix,
            doc.offset,
            doc.solution,
            doc.constants.lipschitz,
            doc.constants.mu,
            doc.constants.ell,
            doc.constants.rho,
        )
    }
}

/// Cap on the dimension accepted when deserializing problem documents.
pub const MAX_DOC_DIM: usize = 512;

/// Dimension above which deserialization skips the O(d^3) certificate checks
/// (solution residual and finiteness are always verified).
const EIG_CHECK_DIM: usize = 64;

impl AffineProblem {
    /// Assemble a problem from raw parts and verify its invariants.
    pub fn from_parts(
        matrix: Matrix,
        offset: Vector,
        solution: Vector,
        lipschitz: f64,
        qsm_mu: Option<f64>,
        sc_ell: Option<f64>,
        snc_rho: Option<f64>,
    ) -> Result<Self> {
        let d = matrix.dim();
        if offset.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: offset.len() });
        }
        if solution.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: solution.len() });
        }
        if !linalg::is_finite(&offset) || !linalg::is_finite(&solution) {
            return Err(Error::NonFinite("problem offset/solution"));
        }
        for (name, v) in [("L", Some(lipschitz)), ("mu", qsm_mu), ("ell", sc_ell), ("rho", snc_rho)] {
            if let Some(v) = v {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "constant {name} must be finite and nonnegative, got {v}"
                    )));
                }
            }
        }
        if let Some(ell) = sc_ell {
            if ell <= 0.0 {
                return Err(Error::InvalidParameter("ell must be positive".into()));
            }
        }
        // Solution residual: ||A x* + b|| <= 1e-10 (1 + ||b||).
        let residual = linalg::norm(&linalg::add(&matrix.matvec(&solution), &offset));
        if residual > 1e-10 * (1.0 + linalg::norm(&offset)) {
            return Err(Error::InvalidParameter(format!(
                "solution does not satisfy A x* + b = 0 (residual {residual:e})"
            )));
        }
        if d <= EIG_CHECK_DIM {
            let sigma = matrix.spectral_norm();
            if (sigma - lipschitz).abs() > 1e-8 * (1.0 + sigma) {
                return Err(Error::InvalidParameter(format!(
                    "certified L = {lipschitz} differs from spectral norm {sigma}"
                )));
            }
            let sym = matrix.symmetric_part();
            if let Some(mu) = qsm_mu {
                if mu > 0.0 && sym.sym_eig_min() < mu - 1e-8 {
                    return Err(Error::InvalidParameter(format!(
                        "certified mu = {mu} exceeds lambda_min(sym A) = {}",
                        sym.sym_eig_min()
                    )));
                }
            }
            if let Some(ell) = sc_ell {
                // Certify only the symmetric-PSD route; general operators may
                // be star-cocoercive without sym A dominating.
                let asym: f64 = (0..d)
                    .flat_map(|i| (0..d).map(move |j| (i, j)))
                    .map(|(i, j)| (matrix.get(i, j) - matrix.get(j, i)).abs())
                    .fold(0.0, f64::max);
                if asym <= 1e-10 && sym.sym_eig_min() >= -1e-10 && sc_ell.is_some() {
                    let lam_max = sym.sym_eig_max();
                    if ell < lam_max - 1e-8 {
                        return Err(Error::InvalidParameter(format!(
                            "certified ell = {ell} below lambda_max(A) = {lam_max}"
                        )));
                    }
                }
            }
        }
        Ok(AffineProblem {
            matrix,
            offset,
            solution,
            lipschitz,
            qsm_mu,
            sc_ell,
            snc_rho,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn offset(&self) -> &[f64] {
        &self.offset
    }

    pub fn solution(&self) -> &[f64] {
        &self.solution
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn qsm_mu(&self) -> Option<f64> {
        self.qsm_mu
    }

    pub fn sc_ell(&self) -> Option<f64> {
        self.sc_ell
    }

    pub fn snc_rho(&self) -> Option<f64> {
        self.snc_rho
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// F(z) = Az + b.
pub fn evaluate(problem: &AffineProblem, z: &[f64]) -> Result<Vector> {
    if z.len() != problem.dim() {
        return Err(Error::DimensionMismatch { expected: problem.dim(), got: z.len() });
    }
    Ok(linalg::add(&problem.matrix.matvec(z), &problem.offset))
}

/// 2x2-rotation block diagonal with diagonal mu and off-diagonal +-c.
/// Each block [[mu, c], [-c, mu]] has symmetric part mu*I and singular values
/// sqrt(mu^2 + c^2) exactly.
fn rotation_block_diagonal(d: usize, mu: f64, c: f64) -> Matrix {
    let mut b = Matrix::zeros(d);
    for i in 0..d / 2 {
        b.set(2 * i, 2 * i, mu);
        b.set(2 * i + 1, 2 * i + 1, mu);
        b.set(2 * i, 2 * i + 1, c);
        b.set(2 * i + 1, 2 * i, -c);
    }
    b
}

/// mu-strongly monotone, L-Lipschitz instance.
///
/// A is the rotation block diagonal conjugated by a seeded random orthogonal
/// matrix, so sym(A) = mu*I and ||Az|| = L||z|| hold exactly (up to rounding),
/// and the star-cocoercivity certificate ell = L^2/mu is tight. The solution
/// is placed at a seeded random point of the unit ball (catches translation
/// bugs), with b = -A x*.
pub fn make_strongly_monotone(d: usize, mu: f64, big_l: f64, seed: u64) -> Result<AffineProblem> {
    if d == 0 || d % 2 != 0 {
        return Err(Error::InvalidParameter(format!("d must be even and positive, got {d}")));
    }
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::InvalidParameter(format!("mu must be positive, got {mu}")));
    }
    if !(big_l >= mu) || !big_l.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "L must satisfy L >= mu > 0, got L = {big_l}, mu = {mu}"
        )));
    }
    let c = (big_l * big_l - mu * mu).sqrt();
    let block = rotation_block_diagonal(d, mu, c);
    let q = linalg::random_orthogonal(d, &mut substream(seed, &[stream_id::ZOO_ORTHOGONAL]));
    let a = block.conjugate_by(&q);
    let solution = sample_in_ball(&mut substream(seed, &[stream_id::ZOO_SOLUTION]), &vec![0.0; d], 1.0);
    let offset = linalg::scale(&a.matvec(&solution), -1.0);
    AffineProblem::from_parts(
        a,
        offset,
        solution,
        big_l,
        Some(mu),
        Some(big_l * big_l / mu),
        Some(0.0),
    )
}

/// Bilinear (skew) instance in dimension 2d: A = [[0, sI], [-sI, 0]], x* = 0.
/// Monotone with equality, star-monotone (rho = 0 and mu = 0 both certified),
/// not star-cocoercive.
pub fn make_bilinear(d: usize, s: f64) -> Result<AffineProblem> {
    if d == 0 {
        return Err(Error::InvalidParameter("d must be positive".into()));
    }
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::InvalidParameter(format!("s must be positive, got {s}")));
    }
    let dim = 2 * d;
    let mut a = Matrix::zeros(dim);
    for i in 0..d {
        a.set(i, d + i, s);
        a.set(d + i, i, -s);
    }
    AffineProblem::from_parts(a, vec![0.0; dim], vec![0.0; dim], s, Some(0.0), None, Some(0.0))
}

/// Weak-Minty instance: A = [[-eps, 1], [-1, -eps]], x* = 0.
/// Violates monotonicity (<Az, z> = -eps||z||^2) but satisfies star-negative
/// comonotonicity with the tight constant rho = eps / (1 + eps^2), so the SNC
/// probe is an equality test.
pub fn make_weak_minty(eps: f64) -> Result<AffineProblem> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("eps must lie in (0, 1), got {eps}")));
    }
    let a = Matrix::from_rows(&[&[-eps, 1.0], &[-1.0, -eps]]);
    let lipschitz = (1.0 + eps * eps).sqrt();
    let rho = eps / (1.0 + eps * eps);
    AffineProblem::from_parts(a, vec![0.0; 2], vec![0.0; 2], lipschitz, None, None, Some(rho))
}

/// Symmetric PSD instance with seeded spectrum in [min_eig, ell], both
/// endpoints included (for d >= 2). Star-cocoercive with ell exactly:
/// ||Az||^2 <= ell <Az, z> holds with equality at the top eigenvector.
pub fn make_star_cocoercive(d: usize, ell: f64, min_eig: f64, seed: u64) -> Result<AffineProblem> {
    if d == 0 {
        return Err(Error::InvalidParameter("d must be positive".into()));
    }
    if !(ell > 0.0) || !ell.is_finite() {
        return Err(Error::InvalidParameter(format!("ell must be positive, got {ell}")));
    }
    if !(0.0..=ell).contains(&min_eig) {
        return Err(Error::InvalidParameter(format!(
            "min_eig must lie in [0, ell], got {min_eig}"
        )));
    }
    let mut spectrum = Vec::with_capacity(d);
    if d == 1 {
        spectrum.push(ell);
    } else {
        let mut rng = substream(seed, &[stream_id::ZOO_SPECTRUM]);
        spectrum.push(min_eig);
        for _ in 0..d - 2 {
            let u: f64 = rand::Rng::random(&mut rng);
            spectrum.push(min_eig + u * (ell - min_eig));
        }
        spectrum.push(ell);
    }
    let q = linalg::random_orthogonal(d, &mut substream(seed, &[stream_id::ZOO_ORTHOGONAL]));
    let mut diag = Matrix::zeros(d);
    for (i, lam) in spectrum.iter().enumerate() {
        diag.set(i, i, *lam);
    }
    // Symmetrize exactly; conjugation leaves rounding-level asymmetry.
    let a = diag.conjugate_by(&q).symmetric_part();
    let solution = sample_in_ball(&mut substream(seed, &[stream_id::ZOO_SOLUTION]), &vec![0.0; d], 1.0);
    let offset = linalg::scale(&a.matvec(&solution), -1.0);
    let qsm = if d == 1 { ell } else { min_eig };
    AffineProblem::from_parts(a, offset, solution, ell, Some(qsm), Some(ell), Some(0.0))
}

/// Structural properties that can be probed by sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbedProperty {
    Monotone,
    StarMonotone,
    Snc,
    Qsm,
    Sc,
    Lipschitz,
}

/// Result of a sampling probe: `min_slack` is the most-violated margin of the
/// defining inequality (left minus right side); negative means a violation
/// was found at `worst_point`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeReport {
    pub property: ProbedProperty,
    pub radius: f64,
    pub n_samples: usize,
    pub min_slack: f64,
    pub worst_point: Vector,
}

/// Sample point (pairs for two-point properties) uniformly in the ball of the
/// given radius around x* and report the worst-case slack of the property's
/// defining inequality.
pub fn probe_property(
    problem: &AffineProblem,
    property: ProbedProperty,
    radius: f64,
    n_samples: usize,
    seed: u64,
) -> Result<ProbeReport> {
    if n_samples == 0 {
        return Err(Error::InvalidParameter("n_samples must be at least 1".into()));
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::InvalidParameter(format!("radius must be positive, got {radius}")));
    }
    let rho = problem.snc_rho;
    let mu = problem.qsm_mu;
    let ell = problem.sc_ell;
    match property {
        ProbedProperty::Snc if rho.is_none() => return Err(Error::MissingConstant("rho")),
        ProbedProperty::Qsm if mu.is_none() => return Err(Error::MissingConstant("mu")),
        ProbedProperty::Sc if ell.is_none() => return Err(Error::MissingConstant("ell")),
        _ => {}
    }

    let star = problem.solution.clone();
    let mut rng = substream(seed, &[stream_id::PROBE]);
    let mut min_slack = f64::INFINITY;
    let mut worst = star.clone();
    for _ in 0..n_samples {
        let x = sample_in_ball(&mut rng, &star, radius);
        let fx = evaluate(problem, &x)?;
        let slack = match property {
            ProbedProperty::Monotone | ProbedProperty::Lipschitz => {
                let y = sample_in_ball(&mut rng, &star, radius);
                let fy = evaluate(problem, &y)?;
                match property {
                    ProbedProperty::Monotone => linalg::dot(&linalg::sub(&fx, &fy), &linalg::sub(&x, &y)),
                    _ => problem.lipschitz * linalg::dist(&x, &y) - linalg::dist(&fx, &fy),
                }
            }
            ProbedProperty::StarMonotone => linalg::dot(&fx, &linalg::sub(&x, &star)),
            ProbedProperty::Snc => {
                linalg::dot(&fx, &linalg::sub(&x, &star)) + rho.unwrap() * linalg::dot(&fx, &fx)
            }
            ProbedProperty::Qsm => {
                let dx = linalg::sub(&x, &star);
                linalg::dot(&fx, &dx) - mu.unwrap() * linalg::dot(&dx, &dx)
            }
            ProbedProperty::Sc => {
                ell.unwrap() * linalg::dot(&fx, &linalg::sub(&x, &star)) - linalg::dot(&fx, &fx)
            }
        };
        if slack < min_slack {
            min_slack = slack;
            worst = x;
        }
    }
    Ok(ProbeReport {
        property,
        radius,
        n_samples,
        min_slack,
        worst_point: worst,
    })
}
