//! Channels, complex momenta and Riemann-sheet bookkeeping.
//!
//! Two kinematic conventions are supported and never mixed within one model:
//!
//! * `Relativistic`: points are complex Mandelstam `s` (MeV^2), momenta are
//!   `k = lambda^{1/2}(s, m1^2, m2^2) / (2 sqrt(s))`.
//! * `Nonrelativistic`: points are complex energies `E` (MeV) measured from
//!   the channel threshold, momenta are `k = sqrt(2 mu E)`.
//!
//! On the first sheet the momentum branch is fixed by `Im k >= 0`, so a bound
//! state below threshold sits at `k = +i kappa` and the physical region
//! carries `k > 0` as the limit from above the unitarity cut. The second
//! sheet flips the sign of `k`, which places a resonance pole at
//! `k = k_r - i k_i` with both parts positive. Note that with this branch the
//! momentum itself anti-reflects, `k(conj s) = -conj(k(s))` off the real
//! axis; Schwarz reflection symmetry holds for amplitudes and loop functions
//! built from it, and is tested there.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// hbar*c used for fm <-> MeV conversions.
pub const HBARC_MEV_FM: f64 = 197.3269804;

/// Which kinematic variable a point carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KinematicsMode {
    /// Complex Mandelstam s in MeV^2.
    Relativistic,
    /// Complex energy E in MeV, measured from threshold.
    Nonrelativistic,
}

/// Per-channel Riemann-sheet flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sheet {
    #[serde(rename = "I")]
    First,
    #[serde(rename = "II")]
    Second,
}

/// One flag per channel.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SheetSignature(pub Vec<Sheet>);

impl SheetSignature {
    pub fn all_first(n: usize) -> Self {
        SheetSignature(vec![Sheet::First; n])
    }

    pub fn all_second(n: usize) -> Self {
        SheetSignature(vec![Sheet::Second; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, channel_index: usize) -> Result<Sheet> {
        self.0.get(channel_index).copied().ok_or_else(|| {
            Error::InvalidConfig(format!(
                "sheet signature has {} entries, channel index {} requested",
                self.0.len(),
                channel_index
            ))
        })
    }
}

impl std::fmt::Display for SheetSignature {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tags: Vec<&str> = self
            .0
            .iter()
            .map(|s| match s {
                Sheet::First => "I",
                Sheet::Second => "II",
            })
            .collect();
        write!(f, "({})", tags.join(","))
    }
}

/// A two-particle channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    m1: f64,
    m2: f64,
    ell: u32,
    spin_label: String,
}

impl Channel {
    pub fn new(m1: f64, m2: f64, ell: u32, spin_label: impl Into<String>) -> Result<Self> {
        if !(m1 > 0.0) || !(m2 > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "channel masses must be positive, got m1 = {m1}, m2 = {m2}"
            )));
        }
        Ok(Channel {
            m1,
            m2,
            ell,
            spin_label: spin_label.into(),
        })
    }

    pub fn m1(&self) -> f64 {
        self.m1
    }

    pub fn m2(&self) -> f64 {
        self.m2
    }

    pub fn ell(&self) -> u32 {
        self.ell
    }

    pub fn spin_label(&self) -> &str {
        &self.spin_label
    }

    /// mu = m1 m2 / (m1 + m2).
    pub fn reduced_mass(&self) -> f64 {
        self.m1 * self.m2 / (self.m1 + self.m2)
    }

    /// (m1 + m2)^2, the branch point of the unitarity cut in s.
    pub fn threshold_s(&self) -> f64 {
        (self.m1 + self.m2).powi(2)
    }

    /// (m1 - m2)^2.
    pub fn pseudo_threshold_s(&self) -> f64 {
        (self.m1 - self.m2).powi(2)
    }

    /// m1 + m2.
    pub fn threshold_e(&self) -> f64 {
        self.m1 + self.m2
    }
}

/// A complex point plus the sheet it lives on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SheetedPoint {
    pub value: Complex64,
    pub mode: KinematicsMode,
    pub sheet: SheetSignature,
}

impl SheetedPoint {
    /// Point in complex Mandelstam s (MeV^2).
    pub fn mandelstam(s: Complex64, sheet: SheetSignature) -> Self {
        SheetedPoint {
            value: s,
            mode: KinematicsMode::Relativistic,
            sheet,
        }
    }

    /// Point in complex energy E (MeV) relative to threshold.
    pub fn energy(e: Complex64, sheet: SheetSignature) -> Self {
        SheetedPoint {
            value: e,
            mode: KinematicsMode::Nonrelativistic,
            sheet,
        }
    }

    pub fn with_value(&self, value: Complex64) -> Self {
        SheetedPoint {
            value,
            mode: self.mode,
            sheet: self.sheet.clone(),
        }
    }
}

/// CM momentum of one channel at a sheeted point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Momentum {
    pub k: Complex64,
    pub channel_index: usize,
}

/// Square root branch with `Im >= 0`; on the real axis (`Im == 0`) the
/// principal value is kept, which is the limit from above the cut.
pub fn upper_half_sqrt(z: Complex64) -> Complex64 {
    let w = z.sqrt();
    if w.im < 0.0 {
        -w
    } else {
        w
    }
}

/// First-sheet CM momentum squared as a single-valued function of the point.
fn momentum_sq(channel: &Channel, point: &SheetedPoint) -> Result<Complex64> {
    match point.mode {
        KinematicsMode::Relativistic => {
            let s = point.value;
            if s.norm() == 0.0 {
                return Err(Error::SingularKinematics(
                    "relativistic momentum needs s != 0".into(),
                ));
            }
            // Kallen function in factored form; keeps full precision at the
            // branch points where the expanded polynomial cancels badly.
            let lambda =
                (s - channel.threshold_s()) * (s - channel.pseudo_threshold_s());
            Ok(lambda / (4.0 * s))
        }
        KinematicsMode::Nonrelativistic => Ok(2.0 * channel.reduced_mass() * point.value),
    }
}

/// Nonrelativistic momentum `k = sqrt(2 mu E)` for a given reduced mass,
/// with the same branch rules as [`cm_momentum`].
pub fn nonrel_momentum(mu: f64, e: Complex64, sheet: Sheet) -> Complex64 {
    let k_first = upper_half_sqrt(2.0 * mu * e);
    match sheet {
        Sheet::First => k_first,
        Sheet::Second => -k_first,
    }
}

/// CM momentum with the sheet flag of `channel_index` applied.
///
/// First sheet: `Im k >= 0`. Second sheet: sign-flipped.
pub fn cm_momentum(
    channel: &Channel,
    point: &SheetedPoint,
    channel_index: usize,
) -> Result<Momentum> {
    let k_first = upper_half_sqrt(momentum_sq(channel, point)?);
    let k = match point.sheet.get(channel_index)? {
        Sheet::First => k_first,
        Sheet::Second => -k_first,
    };
    Ok(Momentum { k, channel_index })
}

/// Two-body phase space rho = p / (8 pi sqrt(s)), continued in s with the
/// sheet-consistent momentum. Relativistic mode only.
pub fn phase_space(
    channel: &Channel,
    point: &SheetedPoint,
    channel_index: usize,
) -> Result<Complex64> {
    if point.mode != KinematicsMode::Relativistic {
        return Err(Error::InvalidConfig(
            "phase_space is defined for relativistic kinematics".into(),
        ));
    }
    if point.value.norm() == 0.0 {
        return Err(Error::SingularKinematics("phase space needs s != 0".into()));
    }
    let p = cm_momentum(channel, point, channel_index)?.k;
    Ok(p / (8.0 * PI * point.value.sqrt()))
}
