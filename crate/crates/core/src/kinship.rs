//! Privacy budgets of relatives.
//!
//! A child's perturbed share also tells an attacker something about the
//! child's parents through Mendelian inheritance. The attacker's posterior
//! over the parent's value is the Mendel table mixed with the RR weights of
//! each child's share (`p` for the shared value, `q` otherwise), assuming no
//! state of the SNP was eliminated.

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::error::{DldpError, Result};
use crate::genotype::SnpValue;
use crate::rr::{rr_params, validate_epsilon};

fn r(n: i64, d: i64) -> Rational64 {
    Rational64::new(n, d)
}

/// Mendelian transition laws for a parent's SNP given its children's.
pub struct MendelTables;

impl MendelTables {
    /// `Pr(parent = column | child = row)`.
    pub fn parent_given_child() -> [[Rational64; 3]; 3] {
        [[r(2, 3), r(1, 3), r(0, 1)], [r(1, 3), r(1, 3), r(1, 3)], [r(0, 1), r(1, 3), r(2, 3)]]
    }

    /// `Pr(parent = column | first child, second child)`, rows ordered
    /// `00, 01, 02, 10, ..., 22`.
    pub fn parent_given_two_children() -> [[Rational64; 3]; 9] {
        [
            [r(4, 5), r(1, 5), r(0, 1)],
            [r(2, 5), r(3, 5), r(0, 1)],
            [r(0, 1), r(1, 1), r(0, 1)],
            [r(2, 5), r(3, 5), r(0, 1)],
            [r(5, 13), r(3, 13), r(5, 13)],
            [r(0, 1), r(3, 5), r(2, 5)],
            [r(0, 1), r(1, 1), r(0, 1)],
            [r(0, 1), r(3, 5), r(2, 5)],
            [r(0, 1), r(1, 5), r(4, 5)],
        ]
    }
}

fn to_f64(x: Rational64) -> f64 {
    *x.numer() as f64 / *x.denom() as f64
}

/// Probability that the child's true value is `m` given its share.
fn share_weights(y: SnpValue, epsilon: f64) -> Result<[f64; 3]> {
    Ok(rr_params(epsilon)?.triple(y))
}

/// Attacker posterior over one parent's SNP given children's shares
/// `(value, epsilon)`. Supports one or two children.
pub fn posterior_parent(shares: &[(SnpValue, f64)]) -> Result<[f64; 3]> {
    match shares {
        [(y, eps)] => {
            let w = share_weights(*y, *eps)?;
            let table = MendelTables::parent_given_child();
            let mut z = [0.0; 3];
            for (m, row) in table.iter().enumerate() {
                for (v, t) in row.iter().enumerate() {
                    z[v] += to_f64(*t) * w[m];
                }
            }
            Ok(z)
        }
        [(y1, e1), (y2, e2)] => {
            let w1 = share_weights(*y1, *e1)?;
            let w2 = share_weights(*y2, *e2)?;
            let table = MendelTables::parent_given_two_children();
            let mut z = [0.0; 3];
            for (row_idx, row) in table.iter().enumerate() {
                let weight = w1[row_idx / 3] * w2[row_idx % 3];
                for (v, t) in row.iter().enumerate() {
                    z[v] += to_f64(*t) * weight;
                }
            }
            Ok(z)
        }
        _ => Err(DldpError::Unsupported(format!(
            "parent posteriors are tabled for one or two children, got {} shares",
            shares.len()
        ))),
    }
}

pub fn posterior_parent_given_share(y: SnpValue, epsilon: f64) -> Result<[f64; 3]> {
    posterior_parent(&[(y, epsilon)])
}

/// Effective budget spent on a parent when one child shares `y` at
/// `epsilon_j`.
pub fn indirect_budget_one_child(epsilon_j: f64, y: SnpValue) -> Result<f64> {
    validate_epsilon(epsilon_j)?;
    Ok(match y {
        SnpValue::One => 0.0,
        _ => ((2.0 * epsilon_j.exp() + 1.0) / 3.0).ln(),
    })
}

/// Largest child budget that keeps the parent within `epsilon_f`.
pub fn max_budget_one_child(epsilon_f: f64) -> Result<f64> {
    validate_epsilon(epsilon_f)?;
    Ok(((3.0 * epsilon_f.exp() - 1.0) / 2.0).ln())
}

/// Effective budget spent on a parent when two children both share 0 with
/// the same budget.
pub fn indirect_budget_two_children(epsilon: f64) -> Result<f64> {
    validate_epsilon(epsilon)?;
    let e = epsilon.exp();
    Ok(((52.0 * e * e + 52.0 * e + 25.0) / 129.0).ln())
}

/// Largest budget for a second child sharing 0 after a first child shared 0
/// at `epsilon`, keeping a parent with budget `epsilon` within it.
pub fn max_budget_second_child(epsilon: f64) -> Result<f64> {
    validate_epsilon(epsilon)?;
    let e = epsilon.exp();
    let arg = (103.0 * e - 25.0) / (52.0 * e + 26.0);
    if arg <= 0.0 {
        return Err(DldpError::Domain(format!("second-child budget undefined at epsilon {epsilon}")));
    }
    Ok(arg.ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyShape {
    OneChildToParent,
    TwoChildrenToParent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Parent,
    Child,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyMember {
    pub id: String,
    pub role: Role,
    /// `None` means no budget limit.
    pub budget: Option<f64>,
}

impl FamilyMember {
    pub fn budget_or_inf(&self) -> f64 {
        self.budget.unwrap_or(f64::INFINITY)
    }
}

/// One value shared earlier by a family member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShareRecord {
    pub member: String,
    pub snp: usize,
    pub value: SnpValue,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyState {
    pub shape: FamilyShape,
    pub members: Vec<FamilyMember>,
    #[serde(default)]
    pub shares: Vec<ShareRecord>,
}

impl FamilyState {
    pub fn from_json(text: &str) -> Result<Self> {
        let family: FamilyState = serde_json::from_str(text)?;
        family.validate()?;
        Ok(family)
    }

    pub fn read_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| DldpError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn member(&self, id: &str) -> Result<&FamilyMember> {
        self.members.iter().find(|m| m.id == id).ok_or_else(|| DldpError::Structure(format!("no family member `{id}`")))
    }

    pub fn validate(&self) -> Result<()> {
        let parents = self.members.iter().filter(|m| m.role == Role::Parent).count();
        let children = self.members.len() - parents;
        let expected_children = match self.shape {
            FamilyShape::OneChildToParent => 1,
            FamilyShape::TwoChildrenToParent => 2,
        };
        if parents != 1 || children != expected_children {
            return Err(DldpError::Unsupported(format!(
                "shape {:?} needs 1 parent and {expected_children} children, got {parents} and {children}",
                self.shape
            )));
        }
        for (i, m) in self.members.iter().enumerate() {
            if self.members[..i].iter().any(|o| o.id == m.id) {
                return Err(DldpError::Structure(format!("duplicate member id `{}`", m.id)));
            }
            if let Some(b) = m.budget {
                if b.is_nan() || b < 0.0 {
                    return Err(DldpError::InvalidParameter(format!("member `{}` has budget {b}", m.id)));
                }
            }
        }
        for s in &self.shares {
            let who = self.member(&s.member)?;
            if who.role != Role::Child {
                return Err(DldpError::Unsupported(format!(
                    "share by `{}`: only children's shares have a tabled inheritance law",
                    s.member
                )));
            }
            validate_epsilon(s.epsilon)?;
            if self.shares.iter().filter(|o| o.member == s.member && o.snp == s.snp).count() > 1 {
                return Err(DldpError::Structure(format!("`{}` shared SNP {} more than once", s.member, s.snp)));
            }
        }
        Ok(())
    }
}

/// Which posterior states are compared when measuring a relative's leakage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Contrast {
    /// `max(z0, z2) / min(z0, z2)`.
    Homozygous,
    /// `max(z) / min(z)` over all three states.
    AllStates,
}

/// How per-output budgets are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregate {
    /// Smallest budget among outputs whose constraint can bind.
    MinBinding,
    /// Largest budget over all outputs.
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolverRule {
    pub contrast: Contrast,
    pub aggregate: Aggregate,
}

impl SolverRule {
    /// Reproduces the one- and two-children closed forms.
    pub const CLOSED_FORM: SolverRule = SolverRule { contrast: Contrast::Homozygous, aggregate: Aggregate::MinBinding };
    /// Every state compared and the maximum over outputs taken.
    pub const LITERAL: SolverRule = SolverRule { contrast: Contrast::AllStates, aggregate: Aggregate::Max };
}

impl Default for SolverRule {
    fn default() -> Self {
        Self::CLOSED_FORM
    }
}

pub const SOLVER_UPPER: f64 = 32.0;
pub const SOLVER_TOLERANCE: f64 = 1e-9;
const SCAN_STEP: f64 = 0.25;

fn contrast_ratio(z: &[f64; 3], contrast: Contrast) -> f64 {
    let states: &[usize] = match contrast {
        Contrast::Homozygous => &[0, 2],
        Contrast::AllStates => &[0, 1, 2],
    };
    let hi = states.iter().map(|&v| z[v]).fold(f64::NEG_INFINITY, f64::max);
    let lo = states.iter().map(|&v| z[v]).fold(f64::INFINITY, f64::min);
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Smallest `t` in `[0, SOLVER_UPPER]` where `ratio(t)` reaches `target`:
/// 0 when it already does at `t = 0`, `+inf` when it never does.
fn first_crossing(ratio: impl Fn(f64) -> Result<f64>, target: f64) -> Result<f64> {
    if ratio(0.0)? >= target {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    while lo < SOLVER_UPPER {
        let hi = (lo + SCAN_STEP).min(SOLVER_UPPER);
        if ratio(hi)? >= target {
            let (mut a, mut b) = (lo, hi);
            while b - a > SOLVER_TOLERANCE {
                let mid = 0.5 * (a + b);
                if ratio(mid)? >= target {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            return Ok(0.5 * (a + b));
        }
        lo = hi;
    }
    Ok(f64::INFINITY)
}

/// Largest budget `next_sharer` may use for `snp` without pushing any
/// relative who has not shared that SNP past their own budget.
pub fn max_budget_general(family: &FamilyState, snp: usize, next_sharer: &str) -> Result<f64> {
    max_budget_general_with(family, snp, next_sharer, SolverRule::default())
}

pub fn max_budget_general_with(family: &FamilyState, snp: usize, next_sharer: &str, rule: SolverRule) -> Result<f64> {
    family.validate()?;
    let sharer = family.member(next_sharer)?;
    if sharer.role != Role::Child {
        return Err(DldpError::Unsupported(
            "only a child sharing toward its parent has a tabled inheritance law".into(),
        ));
    }
    if family.shares.iter().any(|s| s.member == next_sharer && s.snp == snp) {
        return Err(DldpError::Structure(format!("`{next_sharer}` already shared SNP {snp}")));
    }
    let prior: Vec<(SnpValue, f64)> =
        family.shares.iter().filter(|s| s.snp == snp).map(|s| (s.value, s.epsilon)).collect();

    let mut result = f64::INFINITY;
    // Only parents carry a constraint.
    for member in family.members.iter().filter(|m| m.role == Role::Parent) {
        let budget = member.budget_or_inf();
        if budget.is_infinite() {
            continue;
        }
        let target = budget.exp();
        let mut per_output = Vec::with_capacity(3);
        for a in SnpValue::ALL {
            let ratio = |t: f64| {
                let mut shares = prior.clone();
                shares.push((a, t));
                posterior_parent(&shares).map(|z| contrast_ratio(&z, rule.contrast))
            };
            per_output.push(first_crossing(ratio, target)?);
        }
        let member_max = match rule.aggregate {
            Aggregate::MinBinding => per_output.into_iter().fold(f64::INFINITY, f64::min),
            Aggregate::Max => per_output.into_iter().fold(0.0, f64::max),
        };
        result = result.min(member_max);
    }
    Ok(result)
}

/// A donor's budget: its own, capped by the smallest per-SNP maximum.
pub fn select_donor_budget(per_snp_maxima: &[f64], own_budget: f64) -> f64 {
    per_snp_maxima.iter().copied().fold(own_budget, f64::min)
}
