use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The five image classes, in their canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassLabel {
    Blank,
    NoCrystal,
    Weak,
    Good,
    Strong,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; 5] = [
        ClassLabel::Blank,
        ClassLabel::NoCrystal,
        ClassLabel::Weak,
        ClassLabel::Good,
        ClassLabel::Strong,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ClassLabel::Blank => "blank",
            ClassLabel::NoCrystal => "no-crystal",
            ClassLabel::Weak => "weak",
            ClassLabel::Good => "good",
            ClassLabel::Strong => "strong",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Whether images of this class contain crystal diffraction.
    pub fn has_diffraction(self) -> bool {
        matches!(
            self,
            ClassLabel::Weak | ClassLabel::Good | ClassLabel::Strong
        )
    }

    pub fn names() -> Vec<String> {
        Self::ALL.iter().map(|c| c.as_str().to_string()).collect()
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ClassLabel::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown class `{s}`")))
    }
}

/// How images of one class are produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSpec {
    pub name: ClassLabel,
    pub beam_on: bool,
    pub crystal_on: bool,
    /// Half-open `[low, high)` range of total expected Bragg photons.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bragg_budget: Option<[f64; 2]>,
    /// Images to generate for this class.
    pub count: usize,
}

impl ClassSpec {
    pub fn blank(count: usize) -> Self {
        ClassSpec {
            name: ClassLabel::Blank,
            beam_on: false,
            crystal_on: false,
            bragg_budget: None,
            count,
        }
    }

    pub fn no_crystal(count: usize) -> Self {
        ClassSpec {
            name: ClassLabel::NoCrystal,
            beam_on: true,
            crystal_on: false,
            bragg_budget: None,
            count,
        }
    }

    pub fn crystal(name: ClassLabel, budget: [f64; 2], count: usize) -> Self {
        ClassSpec {
            name,
            beam_on: true,
            crystal_on: true,
            bragg_budget: Some(budget),
            count,
        }
    }

    pub fn contains_budget(&self, budget: f64) -> bool {
        self.bragg_budget
            .is_some_and(|[lo, hi]| budget >= lo && budget < hi)
    }

    /// Checks the per-class invariants and the ordering of crystal-class
    /// budget ranges.
    pub fn validate_all(specs: &[ClassSpec]) -> Result<()> {
        for s in specs {
            match s.name {
                ClassLabel::Blank if s.beam_on => {
                    return Err(Error::Config("blank class must have the beam off".into()))
                }
                ClassLabel::NoCrystal if s.crystal_on => {
                    return Err(Error::Config(
                        "no-crystal class must have the crystal off".into(),
                    ))
                }
                _ => {}
            }
            if s.crystal_on {
                if !s.beam_on {
                    return Err(Error::Config(format!(
                        "class {} has a crystal but no beam",
                        s.name
                    )));
                }
                match s.bragg_budget {
                    Some([lo, hi]) if lo > 0.0 && lo < hi => {}
                    _ => {
                        return Err(Error::Config(format!(
                            "class {} needs a budget range 0 < low < high",
                            s.name
                        )))
                    }
                }
            }
        }
        let mut crystal: Vec<&ClassSpec> = specs.iter().filter(|s| s.crystal_on).collect();
        crystal.sort_by_key(|s| s.name);
        for pair in crystal.windows(2) {
            let (a, b) = (pair[0].bragg_budget.unwrap(), pair[1].bragg_budget.unwrap());
            if a[1] > b[0] {
                return Err(Error::Config(format!(
                    "budget ranges of {} and {} overlap or are out of order",
                    pair[0].name, pair[1].name
                )));
            }
        }
        let mut names: Vec<ClassLabel> = specs.iter().map(|s| s.name).collect();
        names.sort();
        names.dedup();
        if names.len() != specs.len() {
            return Err(Error::Config("duplicate class in configuration".into()));
        }
        Ok(())
    }
}

/// Derives the label from generation parameters: blank without beam,
/// no-crystal without crystal, otherwise the unique crystal class whose
/// budget range contains `bragg_photons`.
pub fn label_image(
    beam_on: bool,
    crystal_on: bool,
    bragg_photons: f64,
    specs: &[ClassSpec],
) -> Result<ClassLabel> {
    if !beam_on {
        return Ok(ClassLabel::Blank);
    }
    if !crystal_on {
        return Ok(ClassLabel::NoCrystal);
    }
    let mut matches = specs
        .iter()
        .filter(|s| s.crystal_on && s.contains_budget(bragg_photons));
    match (matches.next(), matches.next()) {
        (Some(spec), None) => Ok(spec.name),
        (None, _) => Err(Error::Labeling(format!(
            "Bragg budget {bragg_photons} is outside every class range"
        ))),
        (Some(_), Some(_)) => Err(Error::Labeling(format!(
            "Bragg budget {bragg_photons} matches more than one class"
        ))),
    }
}
