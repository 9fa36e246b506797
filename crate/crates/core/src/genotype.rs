//! Genotype matrices, pairwise correlation models and a synthetic
//! correlated-population generator.

use std::fmt;
use std::io::{BufRead, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{DldpError, Result};
use crate::seed::{self, tags};

/// Minor-allele count at one SNP.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
#[repr(u8)]
pub enum SnpValue {
    Zero = 0,
    One = 1,
    Two = 2,
}

impl SnpValue {
    pub const ALL: [SnpValue; 3] = [SnpValue::Zero, SnpValue::One, SnpValue::Two];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    #[inline]
    pub fn from_index(i: usize) -> SnpValue {
        SnpValue::ALL[i]
    }

    /// Whether a beacon would answer "yes" for this value alone.
    #[inline]
    pub fn carries_minor_allele(self) -> bool {
        self != SnpValue::Zero
    }
}

impl TryFrom<u8> for SnpValue {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, Self::Error> {
        match v {
            0 => Ok(SnpValue::Zero),
            1 => Ok(SnpValue::One),
            2 => Ok(SnpValue::Two),
            other => Err(format!("SNP value must be 0, 1 or 2, got {other}")),
        }
    }
}

impl From<SnpValue> for u8 {
    fn from(v: SnpValue) -> u8 {
        v as u8
    }
}

impl fmt::Display for SnpValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", *self as u8)
    }
}

/// A subset of `{0, 1, 2}` stored as a 3-bit mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct StateSet(u8);

impl StateSet {
    pub const EMPTY: StateSet = StateSet(0);
    pub const FULL: StateSet = StateSet(0b111);

    #[inline]
    pub fn from_bits(bits: u8) -> StateSet {
        StateSet(bits & 0b111)
    }

    #[inline]
    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn from_values(values: &[SnpValue]) -> StateSet {
        values.iter().fold(StateSet::EMPTY, |s, &v| s.with(v))
    }

    #[inline]
    pub fn contains(self, v: SnpValue) -> bool {
        self.0 & (1 << v.index()) != 0
    }

    #[inline]
    pub fn with(self, v: SnpValue) -> StateSet {
        StateSet(self.0 | (1 << v.index()))
    }

    #[inline]
    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    #[inline]
    pub fn complement(self) -> StateSet {
        StateSet(!self.0 & 0b111)
    }

    pub fn iter(self) -> impl Iterator<Item = SnpValue> {
        SnpValue::ALL.into_iter().filter(move |&v| self.contains(v))
    }
}

impl fmt::Display for StateSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.iter().map(|v| v.to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// `n` individuals by `l` SNPs, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenotypeMatrix {
    n: usize,
    l: usize,
    cells: Vec<SnpValue>,
    snp_ids: Vec<String>,
    individual_ids: Vec<String>,
}

impl GenotypeMatrix {
    /// Builds a matrix from rows, assigning default labels.
    pub fn from_rows(rows: Vec<Vec<SnpValue>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(DldpError::Structure("matrix needs at least one individual".into()));
        }
        let l = rows[0].len();
        if l == 0 {
            return Err(DldpError::Structure("matrix needs at least one SNP".into()));
        }
        if let Some(bad) = rows.iter().position(|r| r.len() != l) {
            return Err(DldpError::Structure(format!("row {bad} has {} SNPs, expected {l}", rows[bad].len())));
        }
        let cells = rows.into_iter().flatten().collect();
        Ok(Self {
            n,
            l,
            cells,
            snp_ids: (0..l).map(|i| format!("snp{i}")).collect(),
            individual_ids: (0..n).map(|j| format!("ind{j}")).collect(),
        })
    }

    pub fn with_labels(mut self, snp_ids: Vec<String>, individual_ids: Vec<String>) -> Result<Self> {
        if snp_ids.len() != self.l || individual_ids.len() != self.n {
            return Err(DldpError::Structure(format!(
                "label counts ({}, {}) do not match dimensions ({}, {})",
                individual_ids.len(),
                snp_ids.len(),
                self.n,
                self.l
            )));
        }
        self.snp_ids = snp_ids;
        self.individual_ids = individual_ids;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn snp_ids(&self) -> &[String] {
        &self.snp_ids
    }

    pub fn individual_ids(&self) -> &[String] {
        &self.individual_ids
    }

    #[inline]
    pub fn get(&self, individual: usize, snp: usize) -> SnpValue {
        self.cells[individual * self.l + snp]
    }

    pub fn row(&self, individual: usize) -> &[SnpValue] {
        &self.cells[individual * self.l..(individual + 1) * self.l]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[SnpValue]> {
        self.cells.chunks(self.l)
    }

    pub fn column(&self, snp: usize) -> Vec<SnpValue> {
        (0..self.n).map(|j| self.get(j, snp)).collect()
    }

    /// Keeps the first `n` individuals.
    pub fn head(&self, n: usize) -> Result<Self> {
        let n = n.min(self.n);
        GenotypeMatrix::from_rows(self.rows().take(n).map(|r| r.to_vec()).collect())
            .and_then(|m| m.with_labels(self.snp_ids.clone(), self.individual_ids[..n].to_vec()))
    }

    /// Parses the whitespace-separated text format: a `n l` header followed by
    /// `n` lines of `l` values; lines starting with `#` and blank lines are
    /// skipped.
    pub fn read_text<R: BufRead>(reader: R) -> Result<Self> {
        let mut header: Option<(usize, usize)> = None;
        let mut rows: Vec<Vec<SnpValue>> = Vec::new();

        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.map_err(|e| DldpError::Parse { line: line_no, column: 0, message: e.to_string() })?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            match header {
                None => {
                    let fields: Vec<&str> = trimmed.split_whitespace().collect();
                    if fields.len() != 2 {
                        return Err(DldpError::Parse {
                            line: line_no,
                            column: 1,
                            message: format!("header must be `n l`, got `{trimmed}`"),
                        });
                    }
                    let parse = |s: &str, col: usize| {
                        s.parse::<usize>().map_err(|_| DldpError::Parse {
                            line: line_no,
                            column: col,
                            message: format!("`{s}` is not a count"),
                        })
                    };
                    let n = parse(fields[0], 1)?;
                    let l = parse(fields[1], 2)?;
                    if n == 0 || l == 0 {
                        return Err(DldpError::Structure(format!("header declares an empty matrix ({n} x {l})")));
                    }
                    header = Some((n, l));
                }
                Some((n, l)) => {
                    if rows.len() == n {
                        return Err(DldpError::Structure(format!(
                            "more than the declared {n} rows (extra data at line {line_no})"
                        )));
                    }
                    let mut row = Vec::with_capacity(l);
                    for (col, tok) in trimmed.split_whitespace().enumerate() {
                        let value = match tok {
                            "0" => SnpValue::Zero,
                            "1" => SnpValue::One,
                            "2" => SnpValue::Two,
                            other => {
                                return Err(DldpError::Parse {
                                    line: line_no,
                                    column: col + 1,
                                    message: format!(
                                        "cell `{other}` (individual {}, SNP {col}) is not 0, 1 or 2",
                                        rows.len()
                                    ),
                                })
                            }
                        };
                        row.push(value);
                    }
                    if row.len() != l {
                        return Err(DldpError::Structure(format!(
                            "line {line_no} has {} values, header declares {l}",
                            row.len()
                        )));
                    }
                    rows.push(row);
                }
            }
        }

        let (n, _) = header.ok_or_else(|| DldpError::Structure("missing `n l` header".into()))?;
        if rows.len() != n {
            return Err(DldpError::Structure(format!("header declares {n} rows, found {}", rows.len())));
        }
        GenotypeMatrix::from_rows(rows)
    }

    pub fn read_file(path: &std::path::Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| DldpError::io(path, e))?;
        Self::read_text(std::io::BufReader::new(file))
    }

    pub fn write_text<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{} {}", self.n, self.l)?;
        let mut line = String::with_capacity(2 * self.l);
        for row in self.rows() {
            line.clear();
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    line.push(' ');
                }
                line.push((b'0' + *v as u8) as char);
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn write_file(&self, path: &std::path::Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| DldpError::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_text(&mut w).map_err(|e| DldpError::io(path, e))?;
        w.flush().map_err(|e| DldpError::io(path, e))
    }
}

/// All pairwise conditionals `Pr(SNP_i = a | SNP_k = b)` plus per-SNP
/// marginals. Undefined entries (zero-support conditioning events, and the
/// diagonal) are stored as NaN and surfaced as `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationModel {
    l: usize,
    cond: Vec<f64>,
    marginals: Vec<[f64; 3]>,
}

#[derive(Serialize, Deserialize)]
struct CorrelationJson {
    l: usize,
    cond: Vec<Vec<[[Option<f64>; 3]; 3]>>,
    marginals: Vec<[f64; 3]>,
}

impl CorrelationModel {
    #[inline]
    fn offset(l: usize, i: usize, k: usize, a: usize, b: usize) -> usize {
        ((i * l + k) * 3 + a) * 3 + b
    }

    pub fn l(&self) -> usize {
        self.l
    }

    /// `Pr(SNP_i = a | SNP_k = b)`, or `None` when undefined.
    #[inline]
    pub fn cond(&self, i: usize, k: usize, a: SnpValue, b: SnpValue) -> Option<f64> {
        let v = self.cond[Self::offset(self.l, i, k, a.index(), b.index())];
        if v.is_nan() {
            None
        } else {
            Some(v)
        }
    }

    pub fn marginal(&self, i: usize) -> [f64; 3] {
        self.marginals[i]
    }

    /// Builds a model from explicit tables; used by tests and hand-made
    /// instances. `cond[i][k][a][b]` with `None` for undefined.
    pub fn from_tables(cond: Vec<Vec<[[Option<f64>; 3]; 3]>>, marginals: Vec<[f64; 3]>) -> Result<Self> {
        let l = marginals.len();
        if l == 0 || cond.len() != l || cond.iter().any(|r| r.len() != l) {
            return Err(DldpError::Structure("correlation tables must be l x l x 3 x 3".into()));
        }
        let mut flat = vec![f64::NAN; l * l * 9];
        for i in 0..l {
            for k in 0..l {
                if i == k {
                    continue;
                }
                for a in 0..3 {
                    for b in 0..3 {
                        if let Some(v) = cond[i][k][a][b] {
                            if !(0.0..=1.0).contains(&v) {
                                return Err(DldpError::InvalidParameter(format!(
                                    "conditional ({i},{k},{a},{b}) = {v} outside [0,1]"
                                )));
                            }
                            flat[Self::offset(l, i, k, a, b)] = v;
                        }
                    }
                }
            }
        }
        Ok(Self { l, cond: flat, marginals })
    }

    pub fn to_json(&self) -> Result<String> {
        let l = self.l;
        let cond = (0..l)
            .map(|i| {
                (0..l)
                    .map(|k| {
                        let mut t = [[None; 3]; 3];
                        for (a, row) in t.iter_mut().enumerate() {
                            for (b, cell) in row.iter_mut().enumerate() {
                                let v = self.cond[Self::offset(l, i, k, a, b)];
                                *cell = (!v.is_nan()).then_some(v);
                            }
                        }
                        t
                    })
                    .collect()
            })
            .collect();
        let json = CorrelationJson { l, cond, marginals: self.marginals.clone() };
        Ok(serde_json::to_string(&json)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let json: CorrelationJson = serde_json::from_str(text)?;
        if json.l != json.marginals.len() {
            return Err(DldpError::Structure(format!(
                "declared l = {} but {} marginal triples",
                json.l,
                json.marginals.len()
            )));
        }
        Self::from_tables(json.cond, json.marginals)
    }

    pub fn read_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| DldpError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn write_file(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| DldpError::io(path, e))
    }

    /// Precomputes, for threshold `tau`, which states of each SNP are
    /// "low correlation" given every other SNP's value.
    pub fn low_index(&self, tau: f64) -> LowCorrelationIndex {
        let l = self.l;
        let mut masks = vec![0u8; l * 3 * l];
        for k in 0..l {
            for b in 0..3 {
                let base = (k * 3 + b) * l;
                for i in 0..l {
                    if i == k {
                        continue;
                    }
                    let mut bits = 0u8;
                    for a in 0..3 {
                        let v = self.cond[Self::offset(l, i, k, a, b)];
                        // NaN compares false: undefined never counts.
                        if v < tau {
                            bits |= 1 << a;
                        }
                    }
                    masks[base + i] = bits;
                }
            }
        }
        LowCorrelationIndex { l, masks }
    }
}

/// For a fixed threshold, `mask(i, k, b)` is the set of states `a` of SNP `i`
/// with `Pr(SNP_i = a | SNP_k = b)` defined and below the threshold.
#[derive(Debug, Clone)]
pub struct LowCorrelationIndex {
    l: usize,
    masks: Vec<u8>,
}

impl LowCorrelationIndex {
    pub fn l(&self) -> usize {
        self.l
    }

    #[inline]
    pub fn mask(&self, i: usize, k: usize, b: SnpValue) -> StateSet {
        StateSet::from_bits(self.masks[(k * 3 + b.index()) * self.l + i])
    }

    /// Masks of every SNP `i` against `SNP_k = b`, indexed by `i`.
    #[inline]
    pub fn row_for(&self, k: usize, b: SnpValue) -> &[u8] {
        let base = (k * 3 + b.index()) * self.l;
        &self.masks[base..base + self.l]
    }
}

/// Estimates the pairwise correlation model of `m` with additive smoothing.
pub fn compute_correlation_model(m: &GenotypeMatrix, pseudo_count: f64) -> Result<CorrelationModel> {
    if !(pseudo_count >= 0.0 && pseudo_count.is_finite()) {
        return Err(DldpError::InvalidParameter(format!(
            "pseudo count must be finite and nonnegative, got {pseudo_count}"
        )));
    }
    let (n, l) = (m.n(), m.l());

    // joint[(i*l + k)*9 + a*3 + b] for i < k
    let mut joint = vec![0u32; l * l * 9];
    let mut single = vec![[0u32; 3]; l];
    for row in m.rows() {
        for i in 0..l {
            let a = row[i].index();
            single[i][a] += 1;
            let base = i * l;
            for k in (i + 1)..l {
                joint[(base + k) * 9 + a * 3 + row[k].index()] += 1;
            }
        }
    }

    let mut cond = vec![f64::NAN; l * l * 9];
    for i in 0..l {
        for k in 0..l {
            if i == k {
                continue;
            }
            for b in 0..3 {
                let denom = single[k][b] as f64 + 3.0 * pseudo_count;
                if denom <= 0.0 {
                    continue;
                }
                for a in 0..3 {
                    let count =
                        if i < k { joint[(i * l + k) * 9 + a * 3 + b] } else { joint[(k * l + i) * 9 + b * 3 + a] };
                    cond[CorrelationModel::offset(l, i, k, a, b)] = (count as f64 + pseudo_count) / denom;
                }
            }
        }
    }

    let denom = n as f64 + 3.0 * pseudo_count;
    let marginals = single
        .iter()
        .map(|c| {
            [
                (c[0] as f64 + pseudo_count) / denom,
                (c[1] as f64 + pseudo_count) / denom,
                (c[2] as f64 + pseudo_count) / denom,
            ]
        })
        .collect();

    Ok(CorrelationModel { l, cond, marginals })
}

/// Parameters for the linked-haplotype generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n: usize,
    pub l: usize,
    /// Target minor-allele frequency per SNP, each in `(0, 0.5]`.
    pub marginal_maf: Vec<f64>,
    /// Probability that a haplotype keeps its latent value from the previous
    /// SNP, in `[0, 1)`.
    pub chain_strength: f64,
    pub seed: u64,
}

/// How per-SNP minor-allele frequencies are assigned.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MafProfile {
    Constant {
        maf: f64,
    },
    /// Each SNP independently draws its MAF uniformly from `[min, max]`.
    Uniform {
        min: f64,
        max: f64,
    },
    /// Contiguous blocks of `block` SNPs alternate between a common and a
    /// rare MAF, starting with common.
    Blocks {
        common: f64,
        rare: f64,
        block: usize,
    },
}

impl MafProfile {
    pub fn assign(&self, l: usize, seed: u64) -> Vec<f64> {
        match *self {
            MafProfile::Constant { maf } => vec![maf; l],
            MafProfile::Uniform { min, max } => {
                let mut rng = seed::rng_for(seed, &[tags::MAF]);
                (0..l).map(|_| min + (max - min) * rng.gen::<f64>()).collect()
            }
            MafProfile::Blocks { common, rare, block } => {
                (0..l).map(|i| if (i / block.max(1)) % 2 == 0 { common } else { rare }).collect()
            }
        }
    }
}

impl SyntheticSpec {
    pub fn with_profile(n: usize, l: usize, profile: MafProfile, chain_strength: f64, seed: u64) -> Self {
        Self { n, l, marginal_maf: profile.assign(l, seed), chain_strength, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.l == 0 {
            return Err(DldpError::InvalidParameter(format!(
                "population must be non-empty, got {} x {}",
                self.n, self.l
            )));
        }
        if self.marginal_maf.len() != self.l {
            return Err(DldpError::InvalidParameter(format!(
                "{} MAF values for {} SNPs",
                self.marginal_maf.len(),
                self.l
            )));
        }
        if let Some(f) = self.marginal_maf.iter().find(|f| !(**f > 0.0 && **f <= 0.5)) {
            return Err(DldpError::InvalidParameter(format!("MAF {f} outside (0, 0.5]")));
        }
        if !(0.0..1.0).contains(&self.chain_strength) {
            return Err(DldpError::InvalidParameter(format!("chain strength {} outside [0, 1)", self.chain_strength)));
        }
        Ok(())
    }
}

/// Hardy-Weinberg genotype probabilities for minor-allele frequency `f`.
pub fn hardy_weinberg(f: f64) -> [f64; 3] {
    [(1.0 - f) * (1.0 - f), 2.0 * f * (1.0 - f), f * f]
}

/// Inverse-CDF draw from a probability triple. Never returns a state with
/// zero probability.
pub fn sample_triple(probs: &[f64; 3], u: f64) -> SnpValue {
    let mut acc = 0.0;
    let mut last_positive = None;
    for (v, &p) in probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last_positive = Some(v);
        if u < acc {
            return SnpValue::from_index(v);
        }
    }
    SnpValue::from_index(last_positive.unwrap_or(0))
}

/// Generates a synthetic population.
///
/// Each individual carries two haplotypes. A haplotype holds a latent
/// uniform `u` that is kept from one SNP to the next with probability
/// `chain_strength` and redrawn otherwise; the haplotype carries the minor
/// allele at SNP `t` iff `u < maf[t]`. Every SNP therefore has exactly its
/// target MAF under Hardy-Weinberg proportions, while neighbouring SNPs are
/// in linkage (minor alleles of rarer SNPs nest inside those of commoner
/// ones). Each row uses its own keyed stream, so row `j` does not depend on
/// `n`.
pub fn generate_synthetic_population(spec: &SyntheticSpec) -> Result<GenotypeMatrix> {
    spec.validate()?;
    let rows = (0..spec.n)
        .map(|j| {
            let mut rng = seed::rng_for(spec.seed, &[tags::SYNTHETIC, j as u64]);
            let mut latent = [0.0f64; 2];
            let mut row = Vec::with_capacity(spec.l);
            for (t, &maf) in spec.marginal_maf.iter().enumerate() {
                let mut minor = 0;
                for u in latent.iter_mut() {
                    let keep: f64 = rng.gen();
                    let fresh: f64 = rng.gen();
                    if t == 0 || keep >= spec.chain_strength {
                        *u = fresh;
                    }
                    minor += usize::from(*u < maf);
                }
                row.push(SnpValue::from_index(minor));
            }
            row
        })
        .collect();
    GenotypeMatrix::from_rows(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: u8) -> SnpValue {
        SnpValue::try_from(x).unwrap()
    }

    fn matrix(rows: &[&[u8]]) -> GenotypeMatrix {
        GenotypeMatrix::from_rows(rows.iter().map(|r| r.iter().map(|&x| v(x)).collect()).collect()).unwrap()
    }

    #[test]
    fn loads_small_matrix() {
        let m = GenotypeMatrix::read_text("# comment\n2 2\n0 1\n2 0\n".as_bytes()).unwrap();
        assert_eq!((m.n(), m.l()), (2, 2));
        assert_eq!(m.row(0), &[SnpValue::Zero, SnpValue::One]);
        assert_eq!(m.row(1), &[SnpValue::Two, SnpValue::Zero]);
    }

    #[test]
    fn rejects_out_of_domain_cell() {
        let err = GenotypeMatrix::read_text("2 2\n0 1\n3 0\n".as_bytes()).unwrap_err();
        match err {
            DldpError::Parse { line, column, message } => {
                assert_eq!((line, column), (3, 1));
                assert!(message.contains('3'));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn rejects_dimension_mismatch() {
        assert!(matches!(GenotypeMatrix::read_text("1 2\n".as_bytes()), Err(DldpError::Structure(_))));
        assert!(matches!(GenotypeMatrix::read_text("1 2\n0 1 2\n".as_bytes()), Err(DldpError::Structure(_))));
        assert!(matches!(GenotypeMatrix::read_text("1 2\n0 1\n1 1\n".as_bytes()), Err(DldpError::Structure(_))));
        assert!(matches!(GenotypeMatrix::read_text("0 2\n".as_bytes()), Err(DldpError::Structure(_))));
    }

    #[test]
    fn copy_column_gives_deterministic_conditionals() {
        let m = matrix(&[&[0, 0], &[1, 1], &[2, 2], &[1, 1]]);
        let corr = compute_correlation_model(&m, 0.0).unwrap();
        for b in SnpValue::ALL {
            for a in SnpValue::ALL {
                let expected = if a == b { 1.0 } else { 0.0 };
                assert_eq!(corr.cond(1, 0, a, b), Some(expected));
            }
        }
    }

    #[test]
    fn hand_counted_conditional() {
        // pairs (col0, col1): (0,0), (0,1), (1,1)
        let m = matrix(&[&[0, 0], &[0, 1], &[1, 1]]);
        let corr = compute_correlation_model(&m, 0.0).unwrap();
        assert_eq!(corr.cond(0, 1, SnpValue::Zero, SnpValue::One), Some(0.5));
        assert_eq!(corr.cond(0, 1, SnpValue::One, SnpValue::One), Some(0.5));
        assert_eq!(corr.cond(0, 1, SnpValue::Zero, SnpValue::Zero), Some(1.0));
        assert_eq!(corr.cond(1, 0, SnpValue::One, SnpValue::Zero), Some(0.5));
    }

    #[test]
    fn zero_support_is_undefined() {
        let m = matrix(&[&[0, 0], &[1, 0], &[2, 0]]);
        let corr = compute_correlation_model(&m, 0.0).unwrap();
        for a in SnpValue::ALL {
            assert_eq!(corr.cond(0, 1, a, SnpValue::One), None);
            assert_eq!(corr.cond(0, 1, a, SnpValue::Two), None);
        }
        let smoothed = compute_correlation_model(&m, 0.5).unwrap();
        assert_eq!(smoothed.cond(0, 1, SnpValue::Zero, SnpValue::One), Some(1.0 / 3.0));
    }

    #[test]
    fn low_index_matches_conditionals() {
        let m = matrix(&[&[0, 0, 1], &[0, 1, 1], &[1, 1, 2], &[2, 2, 2]]);
        let corr = compute_correlation_model(&m, 0.0).unwrap();
        let idx = corr.low_index(0.3);
        for i in 0..3 {
            for k in 0..3 {
                if i == k {
                    continue;
                }
                for b in SnpValue::ALL {
                    let mask = idx.mask(i, k, b);
                    for a in SnpValue::ALL {
                        let low = corr.cond(i, k, a, b).is_some_and(|c| c < 0.3);
                        assert_eq!(mask.contains(a), low);
                    }
                }
            }
        }
    }

    #[test]
    fn synthetic_is_seeded() {
        let spec = SyntheticSpec::with_profile(50, 20, MafProfile::Constant { maf: 0.3 }, 0.5, 9);
        let a = generate_synthetic_population(&spec).unwrap();
        let b = generate_synthetic_population(&spec).unwrap();
        assert_eq!(a, b);
        let other = SyntheticSpec { seed: 10, ..spec };
        assert_ne!(a, generate_synthetic_population(&other).unwrap());
    }

    #[test]
    fn synthetic_rejects_bad_spec() {
        let mut spec = SyntheticSpec::with_profile(5, 3, MafProfile::Constant { maf: 0.3 }, 0.5, 1);
        spec.chain_strength = 1.0;
        assert!(generate_synthetic_population(&spec).is_err());
        spec.chain_strength = 0.5;
        spec.marginal_maf[1] = 0.7;
        assert!(generate_synthetic_population(&spec).is_err());
        spec.marginal_maf.pop();
        assert!(generate_synthetic_population(&spec).is_err());
    }

    #[test]
    fn strong_chain_gives_agreeing_neighbours() {
        let rho = 0.999;
        let spec = SyntheticSpec::with_profile(2000, 5, MafProfile::Constant { maf: 0.3 }, rho, 3);
        let m = generate_synthetic_population(&spec).unwrap();
        for t in 1..5 {
            let agree = m.rows().filter(|r| r[t] == r[t - 1]).count() as f64 / m.n() as f64;
            assert!(agree >= rho * rho - 0.01, "agreement {agree}");
        }
    }

    #[test]
    fn synthetic_marginals_follow_targets() {
        let spec = SyntheticSpec::with_profile(4000, 6, MafProfile::Uniform { min: 0.02, max: 0.5 }, 0.9, 8);
        let m = generate_synthetic_population(&spec).unwrap();
        for (t, &f) in spec.marginal_maf.iter().enumerate() {
            let minor: usize = m.column(t).iter().map(|v| v.index()).sum();
            let observed = minor as f64 / (2.0 * m.n() as f64);
            let se = (f * (1.0 - f) / (2.0 * m.n() as f64)).sqrt();
            assert!((observed - f).abs() < 5.0 * se, "snp {t}: {observed} vs {f}");
        }
    }

    #[test]
    fn sample_triple_skips_zero_mass() {
        assert_eq!(sample_triple(&[0.0, 0.0, 1.0], 0.0), SnpValue::Two);
        assert_eq!(sample_triple(&[0.5, 0.5, 0.0], 0.999_999_999), SnpValue::One);
        assert_eq!(sample_triple(&[0.3, 0.3, 0.4], 0.35), SnpValue::One);
    }
}
