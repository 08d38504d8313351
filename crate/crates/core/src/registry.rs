//! Physics bindings: maps a model class's `physics_binding` and a parameter
//! draw onto a concrete simulator or modal model.
//!
//! Registered bindings:
//!
//! | binding | parameters |
//! |---|---|
//! | `isolator:bouc_wen`, `isolator:bilinear` | `k_post` [MN/m], `c_b` [kN·s/m], `r_k`, `q_y` [%W] |
//! | `isolator:{aashto,jpwri,modified_aashto,caltrans}` | `k_post`, `c_b`, `r_k`, `r_d` |
//! | `tmd:<x>:<y>` with `<x>`, `<y>` in `linear`, `cubic`, `bouc_wen` | `{x,y}_c1`, `{x,y}_c3`, `{x,y}_r_k`, `{x,y}_q_y` [%W_tmd], optional `{x,y}_k_pre` [kN/m] |
//! | `biaxial:<esb>:<sd>` with `linear` or `hysteretic` | `k_rb`; `k_esb` or `esb_beta`, `esb_gamma` (optional `esb_mu_w` [kN], `esb_d` [cm]); `k_sd` or `sd_k`, `sd_k_xy` [kN/cm], `sd_alpha`, `sd_beta`, `sd_gamma` |
//! | `chain:stiffness_scale` | optional `s1..sn` story-stiffness multipliers |
//!
//! Every parameter is looked up first in the draw and then in the class's
//! fixed constants.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::ensemble::ModelClassSpec;
use crate::error::{Error, Result};
use crate::modal::{self, ModalResult};
use crate::physics::{
    BiaxialBaseModel, BiaxialDeviceParams, DynamicSystemBox, ElasticSlidingBearing, IsolatorParams, IsolatorVariant,
    ShearBuildingModel, SteelDamper, TmdFrameModel, TmdLaw,
};

/// Pre-yield stiffness of a Bouc-Wen TMD device relative to its tuning spring
/// when `k_pre` is not fixed by the class.
pub const TMD_PRE_YIELD_RATIO: f64 = 10.0;
/// Sliding-bearing friction force μW [kN] unless fixed by the class.
pub const ESB_MU_W: f64 = 15.0;
/// Sliding-bearing yield displacement [cm] unless fixed by the class.
pub const ESB_YIELD_CM: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TmdKind {
    Linear,
    Cubic,
    BoucWen,
}

impl TmdKind {
    const ALL: [TmdKind; 3] = [TmdKind::Linear, TmdKind::Cubic, TmdKind::BoucWen];

    fn name(self) -> &'static str {
        match self {
            TmdKind::Linear => "linear",
            TmdKind::Cubic => "cubic",
            TmdKind::BoucWen => "bouc_wen",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Binding {
    Isolator(IsolatorVariant),
    Tmd { x: TmdKind, y: TmdKind },
    Biaxial { esb_hysteretic: bool, sd_hysteretic: bool },
    Chain,
}

fn relationship(hysteretic: bool) -> &'static str {
    if hysteretic {
        "hysteretic"
    } else {
        "linear"
    }
}

impl Binding {
    /// Every registered binding identifier.
    pub fn registered() -> Vec<String> {
        let mut out: Vec<String> = IsolatorVariant::ALL.iter().map(|v| format!("isolator:{}", v.name())).collect();
        for x in TmdKind::ALL {
            for y in TmdKind::ALL {
                out.push(format!("tmd:{}:{}", x.name(), y.name()));
            }
        }
        for esb in [false, true] {
            for sd in [false, true] {
                out.push(format!("biaxial:{}:{}", relationship(esb), relationship(sd)));
            }
        }
        out.push("chain:stiffness_scale".into());
        out
    }

    pub fn name(&self) -> String {
        match self {
            Binding::Isolator(v) => format!("isolator:{}", v.name()),
            Binding::Tmd { x, y } => format!("tmd:{}:{}", x.name(), y.name()),
            Binding::Biaxial {
                esb_hysteretic,
                sd_hysteretic,
            } => format!("biaxial:{}:{}", relationship(*esb_hysteretic), relationship(*sd_hysteretic)),
            Binding::Chain => "chain:stiffness_scale".into(),
        }
    }

    pub fn parse(id: &str) -> Result<Self> {
        let parts: Vec<&str> = id.split(':').collect();
        let tmd = |s: &str| TmdKind::ALL.into_iter().find(|k| k.name() == s);
        let rel = |s: &str| match s {
            "linear" => Some(false),
            "hysteretic" => Some(true),
            _ => None,
        };
        let found = match parts.as_slice() {
            ["isolator", v] => IsolatorVariant::ALL.into_iter().find(|x| x.name() == *v).map(Binding::Isolator),
            ["tmd", x, y] => tmd(x).zip(tmd(y)).map(|(x, y)| Binding::Tmd { x, y }),
            ["biaxial", e, s] => rel(e).zip(rel(s)).map(|(esb_hysteretic, sd_hysteretic)| Binding::Biaxial {
                esb_hysteretic,
                sd_hysteretic,
            }),
            ["chain", "stiffness_scale"] => Some(Binding::Chain),
            _ => None,
        };
        found.ok_or_else(|| Error::Config {
            key: "physics_binding".into(),
            message: format!("unknown binding `{id}`; registered: {}", Binding::registered().join(", ")),
        })
    }

    /// Parameters that must be drawn or fixed.
    pub fn required_parameters(&self) -> Vec<String> {
        match self {
            Binding::Isolator(v) => {
                let last = if v.is_hysteretic() { "q_y" } else { "r_d" };
                ["k_post", "c_b", "r_k", last].iter().map(|s| s.to_string()).collect()
            }
            Binding::Tmd { x, y } => [("x", *x), ("y", *y)]
                .iter()
                .flat_map(|(axis, kind)| {
                    let names: &[&str] = match kind {
                        TmdKind::Linear => &["c1"],
                        TmdKind::Cubic => &["c1", "c3"],
                        TmdKind::BoucWen => &["r_k", "q_y"],
                    };
                    names.iter().map(move |n| format!("{axis}_{n}"))
                })
                .collect(),
            Binding::Biaxial {
                esb_hysteretic,
                sd_hysteretic,
            } => {
                let mut names = vec!["k_rb"];
                if *esb_hysteretic {
                    names.extend(["esb_beta", "esb_gamma"]);
                } else {
                    names.push("k_esb");
                }
                if *sd_hysteretic {
                    names.extend(["sd_k", "sd_k_xy", "sd_alpha", "sd_beta", "sd_gamma"]);
                } else {
                    names.push("k_sd");
                }
                names.into_iter().map(String::from).collect()
            }
            Binding::Chain => Vec::new(),
        }
    }

    /// Checks that the class supplies every required parameter.
    pub fn check_class(&self, spec: &ModelClassSpec) -> Result<()> {
        for name in self.required_parameters() {
            if spec.parameter_index(&name).is_none() && !spec.fixed_constants.contains_key(&name) {
                return Err(Error::config(
                    format!("model_class.{}.parameters", spec.class_id),
                    format!("binding `{}` needs parameter `{name}`", self.name()),
                ));
            }
        }
        Ok(())
    }
}

/// Nominal fixed-base chain used by the modal binding [Mg, kN/m].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModalChain {
    pub masses: Vec<f64>,
    pub stiffnesses: Vec<f64>,
    pub modes: usize,
}

impl Default for ModalChain {
    fn default() -> Self {
        ModalChain {
            masses: vec![300.0; 3],
            stiffnesses: vec![40_000.0; 3],
            modes: 3,
        }
    }
}

impl ModalChain {
    pub fn solve(&self, scales: &[f64]) -> Result<ModalResult> {
        let k: Vec<f64> = self.stiffnesses.iter().zip(scales).map(|(k, s)| k * s).collect();
        let (m, k) = modal::shear_chain_matrices(&self.masses, &k);
        modal::solve_modes(&m, &k, self.modes)
    }
}

/// Structures the bindings attach to.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicsContext {
    pub building: ShearBuildingModel,
    pub tmd_frame: TmdFrameModel,
    pub biaxial: BiaxialBaseModel,
    pub chain: ModalChain,
}

/// A simulator or a modal model built from one draw.
pub enum ModelInstance {
    Dynamic(DynamicSystemBox),
    Modal(ModalResult),
}

struct Params<'a> {
    spec: &'a ModelClassSpec,
    theta: &'a [f64],
}

impl Params<'_> {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.spec
            .parameter_index(name)
            .map(|i| self.theta[i])
            .or_else(|| self.spec.fixed_constants.get(name).copied())
    }

    fn get(&self, name: &str) -> Result<f64> {
        self.lookup(name).ok_or_else(|| {
            Error::config(
                format!("model_class.{}.parameters", self.spec.class_id),
                format!("missing parameter `{name}`"),
            )
        })
    }
}

fn tmd_law(p: &Params<'_>, axis: &str, kind: TmdKind, weight: f64, k_tuning: f64) -> Result<TmdLaw> {
    let name = |n: &str| format!("{axis}_{n}");
    Ok(match kind {
        TmdKind::Linear => TmdLaw::Linear { c1: p.get(&name("c1"))? },
        TmdKind::Cubic => TmdLaw::Cubic {
            c1: p.get(&name("c1"))?,
            c3: p.get(&name("c3"))?,
        },
        TmdKind::BoucWen => {
            let k_pre = p.lookup(&name("k_pre")).unwrap_or(TMD_PRE_YIELD_RATIO * k_tuning);
            TmdLaw::bouc_wen(p.get(&name("r_k"))?, p.get(&name("q_y"))? / 100.0 * weight, k_pre)?
        }
    })
}

/// Builds the model for one draw of `spec`.
pub fn instantiate(binding: Binding, spec: &ModelClassSpec, theta: &[f64], ctx: &PhysicsContext) -> Result<ModelInstance> {
    if theta.len() != spec.parameter_names.len() {
        return Err(Error::Dimension(format!(
            "class `{}` expects {} parameters, got {}",
            spec.class_id,
            spec.parameter_names.len(),
            theta.len()
        )));
    }
    let p = Params { spec, theta };
    match binding {
        Binding::Isolator(variant) => {
            let params = IsolatorParams {
                variant,
                k_post: p.get("k_post")?,
                c_b: p.get("c_b")?,
                r_k: p.get("r_k")?,
                q_y_percent: if variant.is_hysteretic() { Some(p.get("q_y")?) } else { None },
                r_d: if variant.is_hysteretic() { None } else { Some(p.get("r_d")?) },
            };
            let b = &ctx.building;
            let law = params.law(b.weight(), b.total_mass())?;
            Ok(ModelInstance::Dynamic(Box::new(b.isolated(law)?)))
        }
        Binding::Tmd { x, y } => {
            let frame = &ctx.tmd_frame;
            let (wx, wy) = frame.tmd_weights();
            let (kx, ky) = frame.tmd_stiffnesses();
            let law_x = tmd_law(&p, "x", x, wx, kx)?;
            let law_y = tmd_law(&p, "y", y, wy, ky)?;
            Ok(ModelInstance::Dynamic(Box::new(frame.assemble(law_x, law_y)?)))
        }
        Binding::Biaxial {
            esb_hysteretic,
            sd_hysteretic,
        } => {
            let esb = if esb_hysteretic {
                ElasticSlidingBearing::hysteretic(
                    p.lookup("esb_mu_w").unwrap_or(ESB_MU_W),
                    p.lookup("esb_d").unwrap_or(ESB_YIELD_CM),
                    p.get("esb_beta")?,
                    p.get("esb_gamma")?,
                )
            } else {
                ElasticSlidingBearing::Linear { k: p.get("k_esb")? }
            };
            let sd = if sd_hysteretic {
                SteelDamper::hysteretic(
                    p.get("sd_k")?,
                    p.get("sd_k_xy")?,
                    p.get("sd_alpha")?,
                    p.get("sd_beta")?,
                    p.get("sd_gamma")?,
                )
            } else {
                SteelDamper::Linear { k: p.get("k_sd")? }
            };
            let devices = BiaxialDeviceParams {
                k_rb: p.get("k_rb")?,
                esb,
                sd,
            };
            Ok(ModelInstance::Dynamic(Box::new(ctx.biaxial.assemble(devices)?)))
        }
        Binding::Chain => {
            let scales: Vec<f64> = (1..=ctx.chain.stiffnesses.len())
                .map(|i| p.lookup(&format!("s{i}")).unwrap_or(1.0))
                .collect();
            Ok(ModelInstance::Modal(ctx.chain.solve(&scales)?))
        }
    }
}

/// Resolves and checks the bindings of every class.
pub fn resolve_all(specs: &[ModelClassSpec]) -> Result<BTreeMap<String, Binding>> {
    specs
        .iter()
        .map(|s| {
            let b = Binding::parse(&s.physics_binding).map_err(|e| match e {
                Error::Config { message, .. } => {
                    Error::config(format!("model_class.{}.physics_binding", s.class_id), message)
                }
                other => other,
            })?;
            b.check_class(s)?;
            Ok((s.class_id.clone(), b))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_registered_binding_parses_back() {
        let all = Binding::registered();
        assert_eq!(all.len(), 6 + 9 + 4 + 1);
        for id in all {
            assert_eq!(Binding::parse(&id).unwrap().name(), id);
        }
    }

    #[test]
    fn unknown_binding_lists_registered() {
        let msg = Binding::parse("boucwen2").unwrap_err().to_string();
        assert!(msg.contains("boucwen2"));
        assert!(msg.contains("isolator:bouc_wen"));
    }
}
