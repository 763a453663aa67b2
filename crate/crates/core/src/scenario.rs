//! JSON scenario format.
//!
//! A scenario fixes the symbol, the initial data, the run controls, and the
//! verification knobs in one file. Everything is dimensionless; the `units`
//! block records the convention (state and time scales equal to 1). Symbol
//! polynomial coefficient arrays are lowest-degree-first. Scenario files are
//! 1-D; the two-dimensional surface of the library is reachable only through
//! the API.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamilton::{ActionForm, AmplitudeForm, CompactBump, GaussianBump, InitialData};
use crate::oracle::TestFunction;
use crate::poly::Poly;
use crate::symbol::Symbol;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub units: Units,
    pub symbol: SymbolSpec,
    pub initial: InitialSpec,
    pub run: RunSpec,
    #[serde(default)]
    pub verify: VerifySpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Units {
    pub state: String,
    pub time: String,
}

impl Default for Units {
    fn default() -> Self {
        Units {
            state: "dimensionless".into(),
            time: "dimensionless".into(),
        }
    }
}

/// Symbol block: `dim`, polynomial coefficient arrays `A`, `V`, `B`
/// (lowest-degree-first), jump atoms, and the spatial window.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SymbolSpec {
    pub dim: usize,
    #[serde(default)]
    pub a: Vec<f64>,
    #[serde(default)]
    pub v: Vec<f64>,
    #[serde(default)]
    pub b: Vec<f64>,
    #[serde(default)]
    pub jumps: Vec<JumpSpec>,
    pub window: [f64; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JumpSpec {
    pub nu: f64,
    pub lambda: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InitialSpec {
    pub s0: ActionSpec,
    pub phi0: AmplitudeSpec,
    pub alpha: AlphaSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ActionSpec {
    #[serde(default)]
    pub poly: Vec<f64>,
    #[serde(default)]
    pub gaussians: Vec<BumpSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AmplitudeSpec {
    pub bumps: Vec<BumpSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BumpSpec {
    pub amp: f64,
    pub center: f64,
    pub width: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlphaSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSpec {
    pub t_final: f64,
    pub dt: f64,
    pub x_window: [f64; 2],
    #[serde(default = "default_x_points")]
    pub x_points: usize,
    pub snapshot_times: Vec<f64>,
    pub eps: Vec<f64>,
}

fn default_x_points() -> usize {
    2048
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifySpec {
    /// Shock-free probe time for oracle comparisons.
    #[serde(default = "default_pre_time")]
    pub pre_caustic_time: f64,
    /// Compact window for sup-norm comparisons.
    #[serde(default = "default_compact")]
    pub compact_window: [f64; 2],
    #[serde(default = "default_test_functions")]
    pub test_functions: Vec<TestFunctionSpec>,
}

fn default_pre_time() -> f64 {
    0.2
}

fn default_compact() -> [f64; 2] {
    [-1.5, 1.5]
}

fn default_test_functions() -> Vec<TestFunctionSpec> {
    vec![
        TestFunctionSpec {
            kind: "gaussian".into(),
            amp: 1.0,
            center: 0.0,
            width: 1.5,
        },
        TestFunctionSpec {
            kind: "bump".into(),
            amp: 1.0,
            center: 0.0,
            width: 2.5,
        },
    ]
}

impl Default for VerifySpec {
    fn default() -> Self {
        VerifySpec {
            pre_caustic_time: default_pre_time(),
            compact_window: default_compact(),
            test_functions: default_test_functions(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestFunctionSpec {
    pub kind: String,
    #[serde(default = "one")]
    pub amp: f64,
    pub center: f64,
    pub width: f64,
}

fn one() -> f64 {
    1.0
}

impl TestFunctionSpec {
    pub fn to_test_function(&self) -> Result<TestFunction> {
        match self.kind.as_str() {
            "gaussian" => Ok(TestFunction::Gaussian {
                amp: self.amp,
                center: self.center,
                width: self.width,
            }),
            "bump" => Ok(TestFunction::Bump {
                amp: self.amp,
                center: self.center,
                width: self.width,
            }),
            other => Err(Error::Scenario(format!("unknown test function kind {other}"))),
        }
    }
}

impl Scenario {
    pub fn from_path(path: &Path) -> Result<Scenario> {
        let text = std::fs::read_to_string(path)?;
        let sc: Scenario = serde_json::from_str(&text)?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn from_json(text: &str) -> Result<Scenario> {
        let sc: Scenario = serde_json::from_str(text)?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn validate(&self) -> Result<()> {
        if self.symbol.dim != 1 {
            return Err(Error::Scenario(
                "scenario files drive the 1-D pipeline; dim must be 1".into(),
            ));
        }
        if self.run.t_final <= 0.0 || self.run.dt <= 0.0 {
            return Err(Error::Scenario("t_final and dt must be positive".into()));
        }
        if self.initial.alpha.count < 2 {
            return Err(Error::Scenario("alpha grid needs at least 2 points".into()));
        }
        let (wlo, whi) = (self.symbol.window[0], self.symbol.window[1]);
        if !(wlo < whi) {
            return Err(Error::Scenario("empty symbol window".into()));
        }
        if self.initial.alpha.min < wlo || self.initial.alpha.max > whi {
            return Err(Error::Scenario(
                "alpha grid must sit inside the symbol window".into(),
            ));
        }
        for b in &self.initial.phi0.bumps {
            if b.center - b.width < wlo || b.center + b.width > whi {
                return Err(Error::Scenario(
                    "initial amplitude support must sit inside the symbol window".into(),
                ));
            }
        }
        if self.run.x_window[0] < wlo || self.run.x_window[1] > whi {
            return Err(Error::Scenario(
                "x window must sit inside the symbol window".into(),
            ));
        }
        Ok(())
    }

    pub fn build_symbol(&self) -> Result<Symbol> {
        let jumps = self
            .symbol
            .jumps
            .iter()
            .map(|j| (j.nu, j.lambda.clone()))
            .collect();
        Symbol::new_1d(
            &self.symbol.a,
            &self.symbol.v,
            &self.symbol.b,
            jumps,
            (self.symbol.window[0], self.symbol.window[1]),
        )
    }

    pub fn build_initial(&self) -> Result<InitialData> {
        let s0 = ActionForm::new(
            Poly::from_coeffs_1d(&self.initial.s0.poly)?,
            self.initial
                .s0
                .gaussians
                .iter()
                .map(|g| GaussianBump {
                    amp: g.amp,
                    center: g.center,
                    width: g.width,
                })
                .collect(),
        );
        let phi0 = AmplitudeForm {
            bumps: self
                .initial
                .phi0
                .bumps
                .iter()
                .map(|b| CompactBump {
                    amp: b.amp,
                    center: b.center,
                    width: b.width,
                })
                .collect(),
        };
        InitialData::new(
            s0,
            phi0,
            InitialData::uniform_alphas(
                self.initial.alpha.min,
                self.initial.alpha.max,
                self.initial.alpha.count,
            ),
        )
    }

    pub fn x_grid(&self) -> Vec<f64> {
        let [lo, hi] = self.run.x_window;
        let n = self.run.x_points;
        (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect()
    }

    /// Copy with constant drift added; used by the verification battery to
    /// exercise a moving shock even for symmetric initial data.
    pub fn with_added_drift(&self, b0: f64) -> Scenario {
        let mut out = self.clone();
        if out.symbol.b.is_empty() {
            out.symbol.b = vec![b0];
        } else {
            out.symbol.b[0] += b0;
        }
        out.name = format!("{}+drift", self.name);
        out
    }
}
