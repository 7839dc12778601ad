use super::{Anisotropy, Basis, KrigingFamily, MlsFamily, ModelKind, ModelSpec, PolynomialFamily, SurrogateFamily};
use crate::error::{Error, Result};

/// Default MLS radius for specs created by name.
pub const DEFAULT_MLS_RADIUS: f64 = 0.3;

static FAMILIES: [&dyn SurrogateFamily; 3] = [&PolynomialFamily, &MlsFamily, &KrigingFamily];

/// Family implementation by id (`polynomial`, `mls`, `kriging`).
pub fn family(id: &str) -> Result<&'static dyn SurrogateFamily> {
    FAMILIES
        .iter()
        .copied()
        .find(|f| f.id() == id)
        .ok_or_else(|| Error::Lookup { kind: "model family", name: id.to_string() })
}

pub fn family_for(spec: &ModelSpec) -> &'static dyn SurrogateFamily {
    let id = match spec.kind {
        ModelKind::Polynomial { .. } => "polynomial",
        ModelKind::Mls { .. } => "mls",
        ModelKind::Kriging { .. } => "kriging",
    };
    family(id).expect("every kind is registered")
}

/// Names accepted by [`spec_by_name`].
pub fn model_names() -> [&'static str; 6] {
    [
        "polynomial-linear",
        "polynomial-quadratic",
        "mls-linear",
        "mls-quadratic",
        "kriging-iso",
        "kriging-aniso",
    ]
}

/// Spec for a registered model name on all inputs.
pub fn spec_by_name(name: &str) -> Result<ModelSpec> {
    let kind = match name {
        "polynomial-linear" => ModelKind::Polynomial { basis: Basis::Linear },
        "polynomial-quadratic" => ModelKind::Polynomial { basis: Basis::Quadratic },
        "mls-linear" => ModelKind::Mls { basis: Basis::Linear, radius: DEFAULT_MLS_RADIUS },
        "mls-quadratic" => ModelKind::Mls { basis: Basis::Quadratic, radius: DEFAULT_MLS_RADIUS },
        "kriging-iso" => ModelKind::Kriging { anisotropy: Anisotropy::Isotropic },
        "kriging-aniso" => ModelKind::Kriging { anisotropy: Anisotropy::Anisotropic },
        _ => return Err(Error::Lookup { kind: "model", name: name.to_string() }),
    };
    Ok(ModelSpec::new(kind))
}
