use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::ism::header_fields;

/// Leaf types at a finite set of sites.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FsmDataset {
    alphabet: Vec<char>,
    /// `types[leaf][site]`: index into the alphabet.
    types: Vec<Vec<u8>>,
}

impl FsmDataset {
    pub fn new(alphabet: Vec<char>, types: Vec<Vec<u8>>) -> Result<Self> {
        if types.len() < 2 {
            return Err(Error::data("a dataset needs at least two leaves"));
        }
        if alphabet.len() < 2 {
            return Err(Error::data("the alphabet needs at least two symbols"));
        }
        let sites = types[0].len();
        if sites == 0 {
            return Err(Error::data("a dataset needs at least one site"));
        }
        for (leaf, row) in types.iter().enumerate() {
            if row.len() != sites {
                return Err(Error::data(format!(
                    "leaf {} has {} sites, expected {sites}",
                    leaf + 1,
                    row.len()
                )));
            }
            if row.iter().any(|&h| h as usize >= alphabet.len()) {
                return Err(Error::data(format!(
                    "leaf {} uses a type outside the alphabet",
                    leaf + 1
                )));
            }
        }
        Ok(Self { alphabet, types })
    }

    /// Binary data from rows of `0`/`1` characters.
    pub fn binary(rows: &[&str]) -> Result<Self> {
        let alphabet = vec!['0', '1'];
        let types = rows.iter().map(|r| encode(r, &alphabet)).collect::<Result<Vec<_>>>()?;
        Self::new(alphabet, types)
    }

    pub fn n(&self) -> usize {
        self.types.len()
    }

    pub fn sites(&self) -> usize {
        self.types[0].len()
    }

    pub fn alphabet(&self) -> &[char] {
        &self.alphabet
    }

    pub fn types(&self) -> &[Vec<u8>] {
        &self.types
    }

    pub fn column(&self, site: usize) -> Vec<u8> {
        self.types.iter().map(|r| r[site]).collect()
    }

    /// Distinct site columns with multiplicities, in first-seen order.
    pub fn patterns(&self) -> Vec<(Vec<u8>, usize)> {
        let mut index: BTreeMap<Vec<u8>, usize> = BTreeMap::new();
        let mut out: Vec<(Vec<u8>, usize)> = Vec::new();
        for s in 0..self.sites() {
            let col = self.column(s);
            match index.get(&col) {
                Some(&k) => out[k].1 += 1,
                None => {
                    index.insert(col.clone(), out.len());
                    out.push((col, 1));
                }
            }
        }
        out
    }

    /// Number of sites at which leaves `a` and `b` differ.
    pub fn differences(&self, a: usize, b: usize) -> usize {
        self.types[a].iter().zip(&self.types[b]).filter(|(x, y)| x != y).count()
    }

    pub fn segregating_sites(&self) -> usize {
        (0..self.sites())
            .filter(|&s| self.types.iter().any(|r| r[s] != self.types[0][s]))
            .count()
    }

    /// Counts of each distinct leaf type, most frequent first.
    pub fn type_counts(&self) -> Vec<(String, usize)> {
        let mut map: BTreeMap<String, usize> = BTreeMap::new();
        for r in &self.types {
            *map.entry(decode(r, &self.alphabet)).or_default() += 1;
        }
        let mut out: Vec<_> = map.into_iter().collect();
        out.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        out
    }

    /// Header `n=<n> sites=<k> model=fsm alphabet=<symbols>`, then one row of
    /// symbols per leaf.
    pub fn to_text(&self) -> String {
        let alpha: String = self.alphabet.iter().collect();
        let mut s = format!("n={} sites={} model=fsm alphabet={alpha}\n", self.n(), self.sites());
        for r in &self.types {
            let _ = writeln!(s, "{}", decode(r, &self.alphabet));
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::data("empty dataset file"))?;
        let f = header_fields(header);
        if f.get("model").map(String::as_str) != Some("fsm") {
            return Err(Error::data("dataset header must declare model=fsm"));
        }
        let num = |k: &str| -> Result<usize> {
            f.get(k)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::data(format!("dataset header lacks {k}=<int>")))
        };
        let (n, sites) = (num("n")?, num("sites")?);
        let alphabet: Vec<char> = f.get("alphabet").map_or("01", String::as_str).chars().collect();
        let types = lines.map(|l| encode(l.trim(), &alphabet)).collect::<Result<Vec<_>>>()?;
        if types.len() != n {
            return Err(Error::data(format!("expected {n} leaf rows, found {}", types.len())));
        }
        let out = Self::new(alphabet, types)?;
        if out.sites() != sites {
            return Err(Error::data(format!("expected {sites} sites, found {}", out.sites())));
        }
        Ok(out)
    }
}

fn encode(row: &str, alphabet: &[char]) -> Result<Vec<u8>> {
    row.chars()
        .map(|c| {
            alphabet
                .iter()
                .position(|&a| a == c)
                .map(|p| p as u8)
                .ok_or_else(|| Error::data(format!("symbol `{c}` is not in the alphabet")))
        })
        .collect()
}

fn decode(row: &[u8], alphabet: &[char]) -> String {
    row.iter().map(|&h| alphabet[h as usize]).collect()
}
