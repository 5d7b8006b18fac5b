use std::fmt;
use std::str::FromStr;

use super::{FormulaError, PrenexFormula, Quant};

/// A class of the positive hierarchy: Sigma_n^+ (leading existential block)
/// or Pi_n^+ (leading universal block) with n blocks. Level 0 is shared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Class {
    pub kind: Quant,
    pub level: usize,
}

impl Class {
    pub fn new(kind: Quant, level: usize) -> Class {
        let kind = if level == 0 { Quant::Exists } else { kind };
        Class { kind, level }
    }

    pub fn sigma(level: usize) -> Class {
        Class::new(Quant::Exists, level)
    }

    pub fn pi(level: usize) -> Class {
        Class::new(Quant::Forall, level)
    }

    pub fn is_sigma(&self) -> bool {
        self.kind == Quant::Exists
    }

    /// Inclusion order: Sigma_n in Sigma_m and Pi_n in Pi_m for n <= m,
    /// and either one in both classes of every higher level.
    pub fn le(&self, other: &Class) -> bool {
        if self.level == 0 {
            return true;
        }
        if self.kind == other.kind {
            self.level <= other.level
        } else {
            self.level < other.level
        }
    }
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = if self.is_sigma() { "Sigma" } else { "Pi" };
        write!(f, "{name}_{}^+", self.level)
    }
}

impl FromStr for Class {
    type Err = FormulaError;

    /// Accepts `Sigma_2^+`, `Sigma_2`, `Pi_3^+`, `Pi3`, `S2` and `P3`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || FormulaError::BadClass(s.to_string());
        let t = s.trim().trim_end_matches("^+").trim_end_matches('+');
        let (kind, rest) = if let Some(r) = t.strip_prefix("Sigma") {
            (Quant::Exists, r)
        } else if let Some(r) = t.strip_prefix("Pi") {
            (Quant::Forall, r)
        } else if let Some(r) = t.strip_prefix('S') {
            (Quant::Exists, r)
        } else if let Some(r) = t.strip_prefix('P') {
            (Quant::Forall, r)
        } else {
            return Err(bad());
        };
        let level = rest.trim_start_matches('_').parse().map_err(|_| bad())?;
        Ok(Class::new(kind, level))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrenexShape {
    /// Pairs (f_i, e_i) of universal and existential block sizes.
    pub profile: Vec<(usize, usize)>,
    pub t: usize,
    pub c: usize,
    pub class: Class,
}

impl PrenexShape {
    pub fn profile_string(&self) -> String {
        let parts: Vec<String> = self.profile.iter().map(|(f, e)| format!("({f},{e})")).collect();
        format!("({})", parts.join(","))
    }
}

impl fmt::Display for PrenexShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} shape={} t={} c={}", self.class, self.profile_string(), self.t, self.c)
    }
}

pub fn shape_and_classify(p: &PrenexFormula) -> PrenexShape {
    let sizes: Vec<(Quant, usize)> = p.blocks.iter().map(|b| (b.kind, b.vars.len())).collect();
    shape_of_blocks(&sizes)
}

pub(crate) fn shape_of_blocks(blocks: &[(Quant, usize)]) -> PrenexShape {
    let mut profile = Vec::new();
    let mut i = 0;
    while i < blocks.len() {
        let mut pair = (0, 0);
        if blocks[i].0 == Quant::Forall {
            pair.0 = blocks[i].1;
            i += 1;
        }
        if i < blocks.len() && blocks[i].0 == Quant::Exists {
            pair.1 = blocks[i].1;
            i += 1;
        }
        profile.push(pair);
    }
    let t = profile.iter().map(|p| p.0).sum();
    let c = match profile.len() {
        0 => 0,
        n => {
            let zeros = usize::from(profile[0].0 == 0) + usize::from(profile[n - 1].1 == 0);
            (2 * n - 1).saturating_sub(zeros)
        }
    };
    let class = match blocks.first() {
        None => Class::sigma(0),
        Some((kind, _)) => Class::new(*kind, blocks.len()),
    };
    PrenexShape { profile, t, c, class }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Quant::{Exists as E, Forall as A};

    #[test]
    fn robinson_profile() {
        let s = shape_of_blocks(&[(A, 5), (E, 4), (A, 3), (E, 1)]);
        assert_eq!(s.to_string(), "Pi_4^+ shape=((5,4),(3,1)) t=8 c=3");
    }

    #[test]
    fn degenerate_shapes() {
        let s = shape_of_blocks(&[]);
        assert_eq!((s.t, s.c, s.class), (0, 0, Class::sigma(0)));
        assert_eq!(Class::sigma(0), Class::pi(0));
        let s = shape_of_blocks(&[(E, 2)]);
        assert_eq!((s.t, s.c, s.class, s.profile), (0, 0, Class::sigma(1), vec![(0, 2)]));
        let s = shape_of_blocks(&[(A, 2), (E, 1), (A, 1)]);
        assert_eq!((s.t, s.c, s.class.to_string()), (3, 2, "Pi_3^+".to_string()));
    }

    #[test]
    fn hierarchy_order() {
        assert!(Class::sigma(1).le(&Class::sigma(1)));
        assert!(Class::sigma(1).le(&Class::pi(2)));
        assert!(!Class::sigma(2).le(&Class::pi(2)));
        assert!(Class::sigma(0).le(&Class::pi(1)));
        assert!(!Class::pi(3).le(&Class::sigma(3)));
    }

    #[test]
    fn class_parsing() {
        assert_eq!("Sigma_3^+".parse::<Class>().unwrap(), Class::sigma(3));
        assert_eq!("Pi_2".parse::<Class>().unwrap(), Class::pi(2));
        assert_eq!("S1".parse::<Class>().unwrap(), Class::sigma(1));
        assert!("Delta_1".parse::<Class>().is_err());
    }
}
