//! Amplitude model families and the physical-region observables built from
//! them: `T`, the unitary S matrix on the open-channel block, and unwrapped
//! phase-shift tables.

mod cdd;
mod ere;
mod kernel;

pub use cdd::CddModel;
pub use ere::EreModel;
pub use kernel::{KernelForm, KernelModel};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kinematics::{phase_space, KinematicsMode, SheetSignature, SheetedPoint};

/// A scattering amplitude model. Kernel models are coupled-channel and
/// relativistic; ERE and CDD are single-channel and nonrelativistic.
#[derive(Debug, Clone, PartialEq)]
pub enum AmplitudeModel {
    Kernel(KernelModel),
    Ere(EreModel),
    Cdd(CddModel),
}

impl AmplitudeModel {
    pub fn mode(&self) -> KinematicsMode {
        match self {
            AmplitudeModel::Kernel(_) => KinematicsMode::Relativistic,
            _ => KinematicsMode::Nonrelativistic,
        }
    }

    pub fn n_channels(&self) -> usize {
        match self {
            AmplitudeModel::Kernel(m) => m.n_channels(),
            _ => 1,
        }
    }

    /// Build a point in this model's kinematic variable.
    pub fn point(&self, value: Complex64, sheet: SheetSignature) -> SheetedPoint {
        SheetedPoint {
            value,
            mode: self.mode(),
            sheet,
        }
    }

    /// T as an n x n matrix (1 x 1 for the scalar families).
    pub fn t_matrix(&self, point: &SheetedPoint) -> Result<DMatrix<Complex64>> {
        match self {
            AmplitudeModel::Kernel(m) => m.t_matrix(point),
            AmplitudeModel::Ere(m) => Ok(DMatrix::from_element(1, 1, m.t(point)?)),
            AmplitudeModel::Cdd(m) => Ok(DMatrix::from_element(1, 1, m.t(point)?)),
        }
    }

    /// Scalar analytic function whose zeros are the poles of T on the
    /// point's sheet signature.
    pub fn pole_objective(&self, point: &SheetedPoint) -> Result<Complex64> {
        match self {
            AmplitudeModel::Kernel(m) => m.pole_objective(point),
            AmplitudeModel::Ere(m) => m.t_inverse(point),
            AmplitudeModel::Cdd(m) => m.pole_objective(point),
        }
    }

    /// Analytic derivative of the pole objective.
    pub fn pole_objective_deriv(&self, point: &SheetedPoint) -> Result<Complex64> {
        match self {
            AmplitudeModel::Kernel(m) => m.pole_objective_deriv(point),
            AmplitudeModel::Ere(m) => m.t_inverse_deriv(point),
            AmplitudeModel::Cdd(m) => m.pole_objective_deriv(point),
        }
    }

    /// Channel thresholds in the model's kinematic variable, ascending.
    pub fn thresholds(&self) -> Vec<f64> {
        match self {
            AmplitudeModel::Kernel(m) => {
                let mut t: Vec<f64> = m.channels().iter().map(|c| c.threshold_s()).collect();
                t.sort_by(|a, b| a.partial_cmp(b).unwrap());
                t
            }
            _ => vec![0.0],
        }
    }

    /// Points where the amplitude is non-analytic in its kinematic variable
    /// (branch points, kernel poles). Used to size residue contours and to
    /// reject root searches that drift into a branch point.
    pub fn non_analytic_points(&self) -> Vec<Complex64> {
        match self {
            AmplitudeModel::Kernel(m) => m.non_analytic_points(),
            _ => vec![Complex64::default()],
        }
    }

    /// Characteristic size of the kinematic variable, used for convergence
    /// thresholds.
    pub fn variable_scale(&self) -> f64 {
        match self {
            AmplitudeModel::Kernel(m) => m
                .channels()
                .iter()
                .map(|c| c.threshold_s())
                .fold(f64::INFINITY, f64::min),
            AmplitudeModel::Ere(m) => 1.0 / (2.0 * m.mu * m.a * m.a),
            AmplitudeModel::Cdd(m) => m.m_z.abs().max(1.0),
        }
    }

    /// Absolute CM energy (sqrt(s), MeV) -> model variable.
    pub fn variable_from_sqrt_s(&self, sqrt_s: f64) -> f64 {
        match self {
            AmplitudeModel::Kernel(_) => sqrt_s * sqrt_s,
            AmplitudeModel::Ere(m) => sqrt_s - m.m_th,
            AmplitudeModel::Cdd(m) => sqrt_s - m.m_th,
        }
    }

    /// Diagonal of the open-channel phase-space matrix at real `value` on
    /// the physical sheet; `None` for closed channels.
    fn open_phase_space(&self, value: f64) -> Result<Vec<Option<f64>>> {
        match self {
            AmplitudeModel::Kernel(m) => {
                let pt = SheetedPoint::mandelstam(
                    Complex64::new(value, 0.0),
                    SheetSignature::all_first(m.n_channels()),
                );
                m.channels()
                    .iter()
                    .enumerate()
                    .map(|(i, ch)| {
                        if value > ch.threshold_s() {
                            Ok(Some(phase_space(ch, &pt, i)?.re))
                        } else {
                            Ok(None)
                        }
                    })
                    .collect()
            }
            AmplitudeModel::Ere(m) => Ok(vec![if value > 0.0 {
                Some((2.0 * m.mu * value).sqrt())
            } else {
                None
            }]),
            AmplitudeModel::Cdd(m) => Ok(vec![if value > 0.0 {
                Some((2.0 * m.mu * value).sqrt())
            } else {
                None
            }]),
        }
    }
}

/// S matrix restricted to the open-channel block.
#[derive(Debug, Clone)]
pub struct SMatrixResult {
    /// Indices of the open channels, in model order.
    pub open_channels: Vec<usize>,
    pub s: DMatrix<Complex64>,
}

/// `S = I + 2 i rho^{1/2} T rho^{1/2}` on the open-channel block, at real
/// `value` (s or E) with the physical `+i0` prescription.
pub fn s_matrix(model: &AmplitudeModel, point: &SheetedPoint) -> Result<SMatrixResult> {
    if point.value.im != 0.0 {
        return Err(Error::InvalidConfig(
            "S matrix is defined for real energies (physical +i0 limit)".into(),
        ));
    }
    if point.sheet.0.iter().any(|s| *s != crate::kinematics::Sheet::First) {
        return Err(Error::InvalidConfig(
            "S matrix is evaluated on the physical sheet".into(),
        ));
    }
    let value = point.value.re;
    let rho = model.open_phase_space(value)?;
    let open: Vec<usize> = rho
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.map(|_| i))
        .collect();
    if open.is_empty() {
        return Err(Error::NoOpenChannel(format!(
            "no channel open at {value}"
        )));
    }
    let t = model.t_matrix(point)?;
    let m = open.len();
    let mut s = DMatrix::<Complex64>::identity(m, m);
    for (a, &i) in open.iter().enumerate() {
        for (b, &j) in open.iter().enumerate() {
            let ri = rho[i].unwrap().sqrt();
            let rj = rho[j].unwrap().sqrt();
            s[(a, b)] += 2.0 * Complex64::i() * ri * t[(i, j)] * rj;
        }
    }
    Ok(SMatrixResult {
        open_channels: open,
        s,
    })
}

/// Per-channel unwrapped phase shifts over a grid of CM energies.
#[derive(Debug, Clone)]
pub struct PhaseShiftTable {
    /// sqrt(s) grid, MeV.
    pub sqrt_s: Vec<f64>,
    pub channels: Vec<PhaseShiftColumn>,
}

#[derive(Debug, Clone)]
pub struct PhaseShiftColumn {
    pub channel_index: usize,
    /// Degrees; NaN where the channel is closed.
    pub delta_deg: Vec<f64>,
    /// |S_ii|; NaN where the channel is closed.
    pub inelasticity: Vec<f64>,
    /// False when the modulo-pi continuation was ambiguous and `delta_deg`
    /// holds the raw half-argument instead.
    pub unwrapped: bool,
}

/// Compute phase shifts `delta_i = arg(S_ii)/2` along the grid, unwrapped by
/// cumulative modulo-pi continuation. A reduced jump at the 90 degree
/// ambiguity makes the channel fall back to raw arguments.
pub fn phase_shift_table(model: &AmplitudeModel, sqrt_s_grid: &[f64]) -> Result<PhaseShiftTable> {
    if sqrt_s_grid.is_empty() {
        return Err(Error::InvalidConfig("empty phase-shift grid".into()));
    }
    let n = model.n_channels();
    let npts = sqrt_s_grid.len();
    let mut raw = vec![vec![f64::NAN; npts]; n];
    let mut eta = vec![vec![f64::NAN; npts]; n];
    let mut any_open = false;
    for (ip, &sqrt_s) in sqrt_s_grid.iter().enumerate() {
        let value = model.variable_from_sqrt_s(sqrt_s);
        let point = model.point(Complex64::new(value, 0.0), SheetSignature::all_first(n));
        match s_matrix(model, &point) {
            Ok(res) => {
                any_open = true;
                for (a, &i) in res.open_channels.iter().enumerate() {
                    let sii = res.s[(a, a)];
                    raw[i][ip] = 0.5 * sii.arg().to_degrees();
                    eta[i][ip] = sii.norm();
                }
            }
            Err(Error::NoOpenChannel(_)) => {}
            Err(e) => return Err(e),
        }
    }
    if !any_open {
        return Err(Error::NoOpenChannel(
            "grid lies entirely below the lowest threshold".into(),
        ));
    }

    let mut channels = Vec::with_capacity(n);
    for i in 0..n {
        let (delta, unwrapped) = unwrap_degrees(&raw[i]);
        channels.push(PhaseShiftColumn {
            channel_index: i,
            delta_deg: delta,
            inelasticity: eta[i].clone(),
            unwrapped,
        });
    }
    Ok(PhaseShiftTable {
        sqrt_s: sqrt_s_grid.to_vec(),
        channels,
    })
}

/// Cumulative modulo-180-degree continuation. Returns the raw values and
/// `false` when a reduced jump hits the ambiguous 90 degree boundary.
fn unwrap_degrees(raw: &[f64]) -> (Vec<f64>, bool) {
    let mut out = raw.to_vec();
    let mut prev: Option<f64> = None;
    for v in out.iter_mut() {
        if v.is_nan() {
            continue;
        }
        if let Some(p) = prev {
            let mut jump = *v - p;
            jump -= 180.0 * (jump / 180.0).round();
            if jump.abs() >= 90.0 * (1.0 - 1e-9) {
                return (raw.to_vec(), false);
            }
            *v = p + jump;
        }
        prev = Some(*v);
    }
    (out, true)
}
