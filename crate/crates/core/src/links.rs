//! Braid closures and the bundled table of named links.

use std::collections::BTreeMap;

use serde::Deserialize;

use crate::diagram::{parse_pd, Basepoint, DiagramError, LinkDiagram};

/// PD code of the closure of a braid on `strands` strands. Generator `k > 0`
/// is a positive crossing between positions `k-1` and `k`; `-k` its inverse.
/// Edges are numbered consecutively along each component; a strand never
/// touched by a generator becomes a free loop.
pub fn braid_closure(strands: usize, word: &[i32]) -> String {
    assert!(strands >= 1);
    let mut next = strands as u32;
    let mut cur: Vec<u32> = (0..strands as u32).collect();
    let init = cur.clone();
    let mut raw: Vec<[u32; 4]> = Vec::new();
    // Per crossing: which slot pairs form the directed strands (in -> out).
    let mut flows: Vec<[(usize, usize); 2]> = Vec::new();
    for &g in word {
        let i = g.unsigned_abs() as usize - 1;
        assert!(i + 1 < strands, "generator {g} out of range");
        let (a, b) = (cur[i], cur[i + 1]);
        let (c, d) = (next, next + 1);
        next += 2;
        if g > 0 {
            // Strand from i+1 passes under to position i; over strand runs a -> d.
            raw.push([b, d, c, a]);
            flows.push([(0, 2), (3, 1)]);
        } else {
            // Strand from i passes under to position i+1; over strand runs b -> c.
            raw.push([a, b, d, c]);
            flows.push([(0, 2), (1, 3)]);
        }
        cur[i] = c;
        cur[i + 1] = d;
    }
    // Close: top label at position k is identified with bottom label k.
    let mut alias: Vec<u32> = (0..next).collect();
    for k in 0..strands {
        alias[cur[k] as usize] = init[k];
    }
    for x in raw.iter_mut() {
        for l in x.iter_mut() {
            *l = alias[*l as usize];
        }
    }
    // successor edge of each edge along the orientation
    let mut succ: BTreeMap<u32, u32> = BTreeMap::new();
    for (x, fl) in raw.iter().zip(&flows) {
        for &(i, o) in fl {
            succ.insert(x[i], x[o]);
        }
    }
    let mut relabel: BTreeMap<u32, u32> = BTreeMap::new();
    let mut free = 0usize;
    let mut counter = 0u32;
    for k in 0..strands as u32 {
        if relabel.contains_key(&k) {
            continue;
        }
        if !succ.contains_key(&k) {
            free += 1;
            continue;
        }
        let mut e = k;
        while !relabel.contains_key(&e) {
            counter += 1;
            relabel.insert(e, counter);
            e = succ[&e];
        }
    }
    let mut items: Vec<String> = raw
        .iter()
        .map(|x| {
            let y = x.map(|l| relabel[&l]);
            format!("X[{},{},{},{}]", y[0], y[1], y[2], y[3])
        })
        .collect();
    items.extend(std::iter::repeat_n("U".to_string(), free));
    format!("PD[{}]", items.join(","))
}

#[derive(Debug, Deserialize)]
struct Table {
    version: u32,
    links: Vec<Entry>,
}

#[derive(Clone, Debug, Deserialize)]
pub struct Entry {
    pub name: String,
    #[serde(default)]
    pub aliases: Vec<String>,
    pub pd: String,
    #[serde(default)]
    pub braid: Option<BraidWord>,
    pub components: usize,
    /// Edge on another component, used by basepoint-independence checks.
    #[serde(default)]
    pub alt_basepoint: Option<u32>,
    pub note: String,
}

#[derive(Clone, Debug, Deserialize)]
pub struct BraidWord {
    pub strands: usize,
    pub word: Vec<i32>,
}

const TABLE_JSON: &str = include_str!("../data/links.json");

fn table() -> Table {
    serde_json::from_str(TABLE_JSON).expect("bundled link table is valid JSON")
}

pub fn table_version() -> u32 {
    table().version
}

pub fn entries() -> Vec<Entry> {
    table().links
}

pub fn entry(name: &str) -> Option<Entry> {
    let key = normalize(name);
    entries()
        .into_iter()
        .find(|e| normalize(&e.name) == key || e.aliases.iter().any(|a| normalize(a) == key))
}

fn normalize(s: &str) -> String {
    s.chars().filter(|c| !matches!(c, '(' | ')' | ',' | '_' | ' ')).collect::<String>().to_lowercase()
}

pub fn names() -> Vec<String> {
    entries().into_iter().map(|e| e.name).collect()
}

pub fn named(name: &str) -> Option<Result<LinkDiagram, DiagramError>> {
    entry(name).map(|e| parse_pd(&e.pd))
}

/// Diagram with the basepoint moved to the entry's alternate component.
pub fn named_alt(name: &str) -> Option<LinkDiagram> {
    let e = entry(name)?;
    let bp = e.alt_basepoint?;
    parse_pd(&e.pd).ok()?.with_basepoint(Basepoint::Edge(bp)).ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_entries_parse_and_match_braids() {
        for e in entries() {
            let d = parse_pd(&e.pd).unwrap_or_else(|err| panic!("{}: {err}", e.name));
            assert_eq!(d.components(), e.components, "{}", e.name);
            if let Some(b) = &e.braid {
                assert_eq!(braid_closure(b.strands, &b.word), e.pd, "{}", e.name);
                let writhe: i32 = b.word.iter().map(|g| g.signum()).sum();
                let s = d.crossing_signs();
                assert_eq!(s.n_plus as i32 - s.n_minus as i32, writhe, "{}", e.name);
            }
            if let Some(bp) = e.alt_basepoint {
                assert!(!d.same_component(1, bp), "{}", e.name);
                d.clone().with_basepoint(Basepoint::Edge(bp)).unwrap();
            }
        }
    }

    #[test]
    fn lookup_accepts_spellings() {
        assert!(entry("t(2,7)").is_some());
        assert!(entry("T27").is_some());
        assert!(entry("hopf_pos").is_some());
        assert!(entry("nonexistent").is_none());
    }

    #[test]
    fn positive_braid_is_positive() {
        let pd = braid_closure(2, &[1, 1, 1]);
        let d = parse_pd(&pd).unwrap();
        assert_eq!(d.crossing_signs().n_plus, 3);
        assert_eq!(d.components(), 1);
        let m = parse_pd(&braid_closure(2, &[-1, -1, -1])).unwrap();
        assert_eq!(m.crossing_signs().n_minus, 3);
    }

    #[test]
    fn untouched_strand_is_free_loop() {
        let d = parse_pd(&braid_closure(3, &[1, 1])).unwrap();
        assert_eq!(d.free_loops(), 1);
        assert_eq!(d.components(), 3);
    }
}
