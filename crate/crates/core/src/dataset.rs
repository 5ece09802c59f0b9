//! Column-major tables of named variables with one designated target.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Values {
    Continuous(Vec<f64>),
    /// `symbols[i]` indexes into `labels`, which holds the sorted distinct
    /// integer labels as they appear in files.
    Discrete { symbols: Vec<usize>, labels: Vec<i64> },
}

impl Values {
    pub fn len(&self) -> usize {
        match self {
            Values::Continuous(v) => v.len(),
            Values::Discrete { symbols, .. } => symbols.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, Values::Discrete { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub values: Values,
}

impl Variable {
    pub fn continuous(name: impl Into<String>, values: Vec<f64>) -> Self {
        Variable {
            name: name.into(),
            values: Values::Continuous(values),
        }
    }

    /// Discrete variable whose symbols are used directly as labels.
    pub fn discrete(name: impl Into<String>, symbols: Vec<usize>) -> Self {
        let alphabet = symbols.iter().max().map_or(1, |m| m + 1);
        Variable {
            name: name.into(),
            values: Values::Discrete {
                symbols,
                labels: (0..alphabet as i64).collect(),
            },
        }
    }

    /// Discrete variable from arbitrary integer labels, compacted to dense symbols.
    pub fn from_labels(name: impl Into<String>, raw: &[i64]) -> Self {
        let mut labels: Vec<i64> = raw.to_vec();
        labels.sort_unstable();
        labels.dedup();
        if labels.is_empty() {
            labels.push(0);
        }
        let index: HashMap<i64, usize> = labels.iter().enumerate().map(|(i, &l)| (l, i)).collect();
        Variable {
            name: name.into(),
            values: Values::Discrete {
                symbols: raw.iter().map(|l| index[l]).collect(),
                labels,
            },
        }
    }

    pub fn alphabet_size(&self) -> Option<usize> {
        match &self.values {
            Values::Discrete { labels, .. } => Some(labels.len()),
            Values::Continuous(_) => None,
        }
    }

    /// Numeric view: continuous values, or discrete labels as reals.
    pub fn as_f64(&self) -> Vec<f64> {
        match &self.values {
            Values::Continuous(v) => v.clone(),
            Values::Discrete { symbols, labels } => symbols.iter().map(|&s| labels[s] as f64).collect(),
        }
    }

    /// Symbol view: discrete symbols, or a discretization of continuous values.
    pub fn symbols(&self, n_bins: usize, strategy: BinStrategy) -> Result<Vec<usize>> {
        match &self.values {
            Values::Discrete { symbols, .. } => Ok(symbols.clone()),
            Values::Continuous(v) => discretize(v, n_bins, strategy),
        }
    }

    fn select_rows(&self, rows: &[usize]) -> Variable {
        let values = match &self.values {
            Values::Continuous(v) => Values::Continuous(rows.iter().map(|&r| v[r]).collect()),
            Values::Discrete { symbols, labels } => Values::Discrete {
                symbols: rows.iter().map(|&r| symbols[r]).collect(),
                labels: labels.clone(),
            },
        };
        Variable {
            name: self.name.clone(),
            values,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    variables: Vec<Variable>,
    n_samples: usize,
    target_index: usize,
}

impl Dataset {
    pub fn new(variables: Vec<Variable>, target_index: usize) -> Result<Self> {
        if variables.is_empty() {
            return Err(Error::InvalidDataset("no variables".into()));
        }
        if target_index >= variables.len() {
            return Err(Error::InvalidDataset(format!(
                "target index {target_index} out of range for {} variables",
                variables.len()
            )));
        }
        let n = variables[0].values.len();
        let mut seen = std::collections::HashSet::new();
        for v in &variables {
            if v.values.len() != n {
                return Err(Error::InvalidDataset(format!(
                    "variable {:?} has {} samples, expected {n}",
                    v.name,
                    v.values.len()
                )));
            }
            if !seen.insert(v.name.as_str()) {
                return Err(Error::InvalidDataset(format!("duplicate variable name {:?}", v.name)));
            }
            if let Values::Discrete { symbols, labels } = &v.values {
                if labels.is_empty() || symbols.iter().any(|&s| s >= labels.len()) {
                    return Err(Error::InvalidDataset(format!(
                        "variable {:?} has symbols outside its alphabet",
                        v.name
                    )));
                }
            }
        }
        Ok(Dataset {
            variables,
            n_samples: n,
            target_index,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn n_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn target_index(&self) -> usize {
        self.target_index
    }

    pub fn target(&self) -> &Variable {
        &self.variables[self.target_index]
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, i: usize) -> &Variable {
        &self.variables[i]
    }

    pub fn name(&self, i: usize) -> &str {
        &self.variables[i].name
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    /// Indices of every non-target variable, in column order.
    pub fn input_indices(&self) -> Vec<usize> {
        (0..self.variables.len()).filter(|&i| i != self.target_index).collect()
    }

    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            variables: self.variables.iter().map(|v| v.select_rows(rows)).collect(),
            n_samples: rows.len(),
            target_index: self.target_index,
        }
    }

    pub fn with_target(mut self, target_index: usize) -> Result<Dataset> {
        if target_index >= self.variables.len() {
            return Err(Error::InvalidDataset(format!("target index {target_index} out of range")));
        }
        self.target_index = target_index;
        Ok(self)
    }

    /// Replace the kind of one column: discrete columns become continuous
    /// (labels as reals); continuous columns become discrete if every value
    /// is integral.
    pub fn with_kind(mut self, index: usize, discrete: bool) -> Result<Dataset> {
        let var = &self.variables[index];
        let replaced = match (&var.values, discrete) {
            (Values::Discrete { .. }, false) => Variable::continuous(var.name.clone(), var.as_f64()),
            (Values::Continuous(v), true) => {
                if v.iter().any(|x| x.fract() != 0.0 || !x.is_finite() || x.abs() > 9.0e15) {
                    return Err(Error::InvalidDataset(format!(
                        "column {:?} has non-integral values and cannot be discrete",
                        var.name
                    )));
                }
                let raw: Vec<i64> = v.iter().map(|&x| x as i64).collect();
                Variable::from_labels(var.name.clone(), &raw)
            }
            _ => return Ok(self),
        };
        self.variables[index] = replaced;
        Ok(self)
    }

    /// CSV with a header row. Continuous values always carry a decimal point
    /// or exponent so that re-parsing preserves the column kind.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        let names: Vec<&str> = self.variables.iter().map(|v| v.name.as_str()).collect();
        out.push_str(&names.join(","));
        out.push('\n');
        for r in 0..self.n_samples {
            for (c, v) in self.variables.iter().enumerate() {
                if c > 0 {
                    out.push(',');
                }
                match &v.values {
                    Values::Continuous(x) => out.push_str(&format_real(x[r])),
                    Values::Discrete { symbols, labels } => out.push_str(&labels[symbols[r]].to_string()),
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string()).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

fn format_real(x: f64) -> String {
    let s = format!("{x}");
    if s.contains(['.', 'e', 'E']) || !x.is_finite() {
        s
    } else {
        format!("{s}.0")
    }
}

fn is_integer_literal(s: &str) -> bool {
    let digits = s.strip_prefix(['-', '+']).unwrap_or(s);
    !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
}

#[derive(Debug, Clone, Default)]
pub struct CsvOptions {
    pub header: bool,
    /// Columns forced to be discrete (must hold integers).
    pub force_discrete: Vec<String>,
    /// Columns forced to be continuous.
    pub force_continuous: Vec<String>,
}

/// Parse a CSV file. With a header, `target` names a column; without one,
/// it is a 0-based column index and columns are named `c0`, `c1`, ...
pub fn load_csv(path: &Path, target: &str, header: bool) -> Result<Dataset> {
    load_csv_with(
        path,
        target,
        &CsvOptions {
            header,
            ..CsvOptions::default()
        },
    )
}

pub fn load_csv_with(path: &Path, target: &str, opts: &CsvOptions) -> Result<Dataset> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_csv(&text, target, opts)
}

pub fn parse_csv(text: &str, target: &str, opts: &CsvOptions) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut names: Option<Vec<String>> = None;
    let mut cells: Vec<Vec<String>> = Vec::new();
    let mut width: Option<usize> = None;
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Csv(e.to_string()))?;
        let row = rec.position().map_or(i as u64 + 1, |p| p.line()) as usize;
        if rec.len() == 1 && rec.get(0) == Some("") {
            continue;
        }
        match width {
            None => width = Some(rec.len()),
            Some(w) if w != rec.len() => {
                return Err(Error::RaggedRow {
                    row,
                    expected: w,
                    found: rec.len(),
                })
            }
            _ => {}
        }
        if opts.header && names.is_none() {
            names = Some(rec.iter().map(str::to_string).collect());
            continue;
        }
        cells.push(rec.iter().map(str::to_string).collect());
    }
    let width = width.ok_or_else(|| Error::InvalidDataset("empty file".into()))?;
    if cells.is_empty() {
        return Err(Error::InvalidDataset("no data rows".into()));
    }
    let names = names.unwrap_or_else(|| (0..width).map(|c| format!("c{c}")).collect());
    let first_data_row = if opts.header { 2 } else { 1 };

    let mut variables = Vec::with_capacity(width);
    for (c, name) in names.iter().enumerate() {
        let column: Vec<&str> = cells.iter().map(|r| r[c].as_str()).collect();
        let integral = column.iter().all(|s| is_integer_literal(s));
        let discrete = if opts.force_continuous.contains(name) {
            false
        } else {
            integral || opts.force_discrete.contains(name)
        };
        if discrete {
            let mut raw = Vec::with_capacity(column.len());
            for (r, s) in column.iter().enumerate() {
                let v = s.parse::<i64>().ok().or_else(|| {
                    s.parse::<f64>()
                        .ok()
                        .filter(|x| x.fract() == 0.0 && x.abs() < 9.0e15)
                        .map(|x| x as i64)
                });
                raw.push(v.ok_or_else(|| Error::NonNumeric {
                    row: r + first_data_row,
                    column: c,
                    value: s.to_string(),
                })?);
            }
            variables.push(Variable::from_labels(name.clone(), &raw));
        } else {
            let mut vals = Vec::with_capacity(column.len());
            for (r, s) in column.iter().enumerate() {
                let v = s.parse::<f64>().ok().filter(|x| x.is_finite());
                vals.push(v.ok_or_else(|| Error::NonNumeric {
                    row: r + first_data_row,
                    column: c,
                    value: s.to_string(),
                })?);
            }
            variables.push(Variable::continuous(name.clone(), vals));
        }
    }
    let target_index = if opts.header {
        let hits: Vec<usize> = names.iter().enumerate().filter(|(_, n)| *n == target).map(|(i, _)| i).collect();
        match hits.as_slice() {
            [i] => *i,
            _ => return Err(Error::UnknownTarget(target.to_string())),
        }
    } else {
        target
            .parse::<usize>()
            .ok()
            .filter(|&i| i < width)
            .ok_or_else(|| Error::UnknownTarget(target.to_string()))?
    };
    Dataset::new(variables, target_index)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BinStrategy {
    #[default]
    EqualWidth,
    EqualFrequency,
}

impl std::str::FromStr for BinStrategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "equal-width" => Ok(BinStrategy::EqualWidth),
            "equal-frequency" => Ok(BinStrategy::EqualFrequency),
            other => Err(Error::InvalidArgument(format!("unknown bin strategy {other:?}"))),
        }
    }
}

pub fn discretize(values: &[f64], n_bins: usize, strategy: BinStrategy) -> Result<Vec<usize>> {
    if n_bins == 0 {
        return Err(Error::InvalidArgument("n_bins must be at least 1".into()));
    }
    if values.is_empty() {
        return Err(Error::InvalidArgument("cannot discretize an empty vector".into()));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("non-finite value at position {i}")));
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if min == max {
        return Ok(vec![0; values.len()]);
    }
    match strategy {
        BinStrategy::EqualWidth => {
            let span = max - min;
            Ok(values
                .iter()
                .map(|&v| (((v - min) / span * n_bins as f64).floor() as usize).min(n_bins - 1))
                .collect())
        }
        BinStrategy::EqualFrequency => {
            let n = values.len();
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
            let mut bins = vec![0; n];
            for (rank, &i) in order.iter().enumerate() {
                bins[i] = rank * n_bins / n;
            }
            Ok(bins)
        }
    }
}

/// Seeded uniform permutation; the multiset of values is preserved.
pub fn permute_variable<T: Clone>(values: &[T], seed: Seed) -> Vec<T> {
    let mut out = values.to_vec();
    seed.rng().shuffle(&mut out);
    out
}

/// Row indices of a seeded train/test split, each part in ascending order.
pub fn split_indices(n: usize, test_fraction: f64, seed: Seed) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "test fraction {test_fraction} outside (0, 1)"
        )));
    }
    if n < 2 {
        return Err(Error::InvalidArgument("need at least 2 rows to split".into()));
    }
    let n_test = ((test_fraction * n as f64 + 1e-9).floor() as usize).max(1);
    if n_test >= n {
        return Err(Error::InvalidArgument("training part would be empty".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    seed.rng().shuffle(&mut order);
    let mut test = order[..n_test].to_vec();
    let mut train = order[n_test..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    Ok((train, test))
}

pub fn train_test_split(data: &Dataset, test_fraction: f64, seed: Seed) -> Result<(Dataset, Dataset)> {
    let (train, test) = split_indices(data.n_samples(), test_fraction, seed)?;
    Ok((data.select_rows(&train), data.select_rows(&test)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn opts() -> CsvOptions {
        CsvOptions {
            header: true,
            ..Default::default()
        }
    }

    #[test]
    fn parses_header_and_kinds() {
        let mut text = String::from("x1,x2,y\n");
        for i in 0..100 {
            text.push_str(&format!("{},{}.5,{}\n", i % 2, i, i % 3));
        }
        let d = parse_csv(&text, "y", &opts()).unwrap();
        assert_eq!(d.n_variables(), 3);
        assert_eq!(d.n_samples(), 100);
        assert_eq!(d.target_index(), 2);
        assert_eq!(d.variable(0).alphabet_size(), Some(2));
        assert!(!d.variable(1).values.is_discrete());
    }

    #[test]
    fn binary_column_is_discrete() {
        let d = parse_csv("a,y\n0,1.0\n1,2.0\n1,3.0\n0,4.0\n", "y", &opts()).unwrap();
        assert_eq!(d.variable(0).alphabet_size(), Some(2));
    }

    #[test]
    fn ragged_row_is_reported() {
        let err = parse_csv("a,b,c\n1,2,3\n1,2\n", "c", &opts()).unwrap_err();
        match err {
            Error::RaggedRow { row, expected, found } => assert_eq!((row, expected, found), (3, 3, 2)),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn non_numeric_and_unknown_target() {
        assert!(matches!(
            parse_csv("a,b\n1,x\n", "b", &opts()),
            Err(Error::NonNumeric { row: 2, column: 1, .. })
        ));
        assert!(matches!(parse_csv("a,b\n1,2\n", "z", &opts()), Err(Error::UnknownTarget(_))));
        let d = parse_csv("1,2\n3,4\n", "1", &CsvOptions::default()).unwrap();
        assert_eq!(d.target_index(), 1);
        assert!(load_csv(Path::new("/nonexistent/file.csv"), "y", true).is_err());
    }

    #[test]
    fn overrides_switch_kinds() {
        let o = CsvOptions {
            header: true,
            force_continuous: vec!["a".into()],
            force_discrete: vec!["b".into()],
        };
        let d = parse_csv("a,b\n1,2.0\n3,4.0\n", "b", &o).unwrap();
        assert!(!d.variable(0).values.is_discrete());
        assert_eq!(d.variable(1).alphabet_size(), Some(2));
    }

    #[test]
    fn discretize_examples() {
        assert_eq!(
            discretize(&[0.0, 0.25, 0.5, 0.75, 1.0], 5, BinStrategy::EqualWidth).unwrap(),
            vec![0, 1, 2, 3, 4]
        );
        assert_eq!(discretize(&[3.3; 10], 5, BinStrategy::EqualWidth).unwrap(), vec![0; 10]);
        assert_eq!(discretize(&[3.3; 10], 5, BinStrategy::EqualFrequency).unwrap(), vec![0; 10]);
        let mut s = Seed(11).rng();
        let z: Vec<f64> = (0..100).map(|_| s.normal()).collect();
        let b = discretize(&z, 5, BinStrategy::EqualFrequency).unwrap();
        for k in 0..5 {
            assert_eq!(b.iter().filter(|&&x| x == k).count(), 20);
        }
        assert!(discretize(&[1.0, f64::NAN], 2, BinStrategy::EqualWidth).is_err());
        assert!(discretize(&[], 2, BinStrategy::EqualWidth).is_err());
        assert!(discretize(&[1.0], 0, BinStrategy::EqualWidth).is_err());
    }

    #[test]
    fn permutation_is_reproducible_and_uniform() {
        assert_eq!(permute_variable(&[1, 2, 3], Seed(4)), permute_variable(&[1, 2, 3], Seed(4)));
        let mut counts = HashMap::new();
        for s in 0..10_000u64 {
            *counts.entry(permute_variable(&[1, 2, 3], Seed(s))).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 6);
        for c in counts.values() {
            assert!((*c as f64 / 10_000.0 - 1.0 / 6.0).abs() < 0.02);
        }
    }

    #[test]
    fn split_examples() {
        let (train, test) = split_indices(10, 0.3, Seed(1)).unwrap();
        assert_eq!((train.len(), test.len()), (7, 3));
        assert_eq!(split_indices(10, 0.3, Seed(1)).unwrap(), (train.clone(), test.clone()));
        let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert!(split_indices(10, 1.0, Seed(1)).is_err());
        assert!(split_indices(10, 0.0, Seed(1)).is_err());
    }

    proptest! {
        #[test]
        fn csv_round_trip(rows in proptest::collection::vec((-1.0e6f64..1.0e6, 0i64..7, -3i64..3), 1..40)) {
            let vars = vec![
                Variable::continuous("a", rows.iter().map(|r| r.0).collect()),
                Variable::from_labels("b", &rows.iter().map(|r| r.1).collect::<Vec<_>>()),
                Variable::continuous("y", rows.iter().map(|r| r.2 as f64).collect()),
            ];
            let d = Dataset::new(vars, 2).unwrap();
            let text = d.to_csv_string();
            let back = parse_csv(&text, "y", &opts()).unwrap();
            prop_assert_eq!(&back, &d);
            prop_assert_eq!(parse_csv(&back.to_csv_string(), "y", &opts()).unwrap(), back);
        }

        #[test]
        fn permutation_preserves_multiset(v in proptest::collection::vec(-50i32..50, 1..60), s in any::<u64>()) {
            let mut p = permute_variable(&v, Seed(s));
            let mut o = v.clone();
            p.sort_unstable();
            o.sort_unstable();
            prop_assert_eq!(p, o);
        }

        #[test]
        fn equal_width_is_monotone(v in proptest::collection::vec(-1.0e3f64..1.0e3, 1..60), bins in 1usize..12) {
            let b = discretize(&v, bins, BinStrategy::EqualWidth).unwrap();
            for i in 0..v.len() {
                prop_assert!(b[i] < bins);
                for j in 0..v.len() {
                    if v[i] <= v[j] {
                        prop_assert!(b[i] <= b[j]);
                    }
                }
            }
        }
    }
}
