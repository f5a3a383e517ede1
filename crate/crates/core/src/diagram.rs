//! PD-coded link diagrams and their resolutions.
//!
//! A crossing `X[a,b,c,d]` lists its four edge labels counterclockwise
//! starting from the incoming under-strand, so the under-strand runs
//! `a -> c`. The over-strand direction is not part of the code; it is
//! inferred from the requirement that every edge has one head and one
//! tail. A crossing is positive when the over-strand runs `d -> b`, i.e.
//! left-to-right seen along the under-strand.
//!
//! The 0-smoothing joins `a-b` and `c-d`, the 1-smoothing joins `a-d` and
//! `b-c`. For a positive crossing the 0-smoothing is the oriented one.

use std::collections::VecDeque;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DiagramError {
    #[error("syntax error at offset {offset}: {msg}")]
    Syntax { offset: usize, msg: String },
    #[error("edge label {label} appears {count} times (expected exactly 2)")]
    LabelMultiplicity { label: u32, count: usize },
    #[error("edge labels must be exactly 1..{max}; label {label} is out of range")]
    LabelRange { label: u32, max: u32 },
    #[error("inconsistent orientation at edge {0}")]
    Orientation(u32),
    #[error("diagram is not planar: {faces} faces, expected {expected}")]
    NotPlanar { faces: usize, expected: usize },
    #[error("basepoint {0} does not name an edge or free loop")]
    Basepoint(String),
    #[error("empty diagram (no crossings and no free loops)")]
    Empty,
}

/// Where the link is marked. Free loops are indexed from 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Basepoint {
    Edge(u32),
    Loop(usize),
}

impl fmt::Display for Basepoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Basepoint::Edge(e) => write!(f, "{e}"),
            Basepoint::Loop(k) => write!(f, "U{k}"),
        }
    }
}

impl std::str::FromStr for Basepoint {
    type Err = DiagramError;
    fn from_str(s: &str) -> Result<Self, DiagramError> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix('U') {
            let k = if rest.is_empty() { Ok(0) } else { rest.parse() };
            return k.map(Basepoint::Loop).map_err(|_| DiagramError::Basepoint(s.into()));
        }
        s.parse().map(Basepoint::Edge).map_err(|_| DiagramError::Basepoint(s.into()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinkDiagram {
    crossings: Vec<[u32; 4]>,
    free_loops: usize,
    basepoint: Basepoint,
    /// Per crossing: `true` iff the over-strand runs `d -> b`.
    over_d_to_b: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CrossingSigns {
    pub n_plus: usize,
    pub n_minus: usize,
    pub signs: Vec<i8>,
}

/// The circles of one cube vertex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Smoothing {
    pub vertex: u64,
    pub n: usize,
    /// Each circle as its sorted edge labels; free loop `k` carries the
    /// pseudo-label `2n + 1 + k`. Circles are ordered by smallest label.
    pub circles: Vec<Vec<u32>>,
    pub special_index: usize,
    /// `label_circle[l]` is the circle containing label `l` (index 0 unused).
    pub label_circle: Vec<usize>,
}

impl Smoothing {
    pub fn circle_of(&self, label: u32) -> usize {
        self.label_circle[label as usize]
    }

    pub fn bit(&self, i: usize) -> bool {
        self.vertex >> i & 1 == 1
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Smaller root wins so classes are named by their least element.
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

impl LinkDiagram {
    /// Validates crossings and builds a diagram with the default basepoint
    /// (lowest edge label, or the first free loop).
    pub fn new(crossings: Vec<[u32; 4]>, free_loops: usize) -> Result<Self, DiagramError> {
        if crossings.is_empty() && free_loops == 0 {
            return Err(DiagramError::Empty);
        }
        let n = crossings.len();
        let max = 2 * n as u32;
        let mut count = vec![0usize; max as usize + 1];
        for x in &crossings {
            for &l in x {
                if l == 0 || l > max {
                    return Err(DiagramError::LabelRange { label: l, max });
                }
                count[l as usize] += 1;
            }
        }
        if let Some(l) = (1..=max).find(|&l| count[l as usize] != 2) {
            return Err(DiagramError::LabelMultiplicity { label: l, count: count[l as usize] });
        }
        let over_d_to_b = orient(&crossings)?;
        check_planar(&crossings)?;
        let basepoint = if n > 0 { Basepoint::Edge(1) } else { Basepoint::Loop(0) };
        Ok(Self { crossings, free_loops, basepoint, over_d_to_b })
    }

    pub fn with_basepoint(mut self, bp: Basepoint) -> Result<Self, DiagramError> {
        let ok = match bp {
            Basepoint::Edge(e) => e >= 1 && e <= 2 * self.crossings.len() as u32,
            Basepoint::Loop(k) => k < self.free_loops,
        };
        if !ok {
            return Err(DiagramError::Basepoint(bp.to_string()));
        }
        self.basepoint = bp;
        Ok(self)
    }

    pub fn crossings(&self) -> &[[u32; 4]] {
        &self.crossings
    }

    pub fn n_crossings(&self) -> usize {
        self.crossings.len()
    }

    pub fn free_loops(&self) -> usize {
        self.free_loops
    }

    pub fn basepoint(&self) -> Basepoint {
        self.basepoint
    }

    /// Total number of edge labels including free-loop pseudo-labels.
    pub fn n_labels(&self) -> usize {
        2 * self.crossings.len() + self.free_loops
    }

    fn basepoint_label(&self) -> u32 {
        match self.basepoint {
            Basepoint::Edge(e) => e,
            Basepoint::Loop(k) => 2 * self.crossings.len() as u32 + 1 + k as u32,
        }
    }

    pub fn crossing_signs(&self) -> CrossingSigns {
        let signs: Vec<i8> = self.over_d_to_b.iter().map(|&p| if p { 1 } else { -1 }).collect();
        let n_plus = signs.iter().filter(|&&s| s > 0).count();
        CrossingSigns { n_plus, n_minus: signs.len() - n_plus, signs }
    }

    /// Number of link components.
    pub fn components(&self) -> usize {
        let max = 2 * self.crossings.len();
        let mut uf = self.strand_classes();
        let strands = (1..=max).filter(|&l| uf.find(l) == l).count();
        strands + self.free_loops
    }

    /// Whether two edge labels lie on the same link component.
    pub fn same_component(&self, e1: u32, e2: u32) -> bool {
        let mut uf = self.strand_classes();
        uf.find(e1 as usize) == uf.find(e2 as usize)
    }

    fn strand_classes(&self) -> UnionFind {
        let mut uf = UnionFind::new(2 * self.crossings.len() + 1);
        for x in &self.crossings {
            uf.union(x[0] as usize, x[2] as usize);
            uf.union(x[1] as usize, x[3] as usize);
        }
        uf
    }

    /// Circles of the resolution at `vertex` (bit `i` = smoothing of crossing `i`).
    pub fn resolve(&self, vertex: u64) -> Smoothing {
        let n = self.crossings.len();
        assert!(n < 64, "at most 63 crossings");
        assert!(vertex >> n == 0, "vertex has bits beyond the crossing count");
        let total = self.n_labels();
        let mut uf = UnionFind::new(total + 1);
        for (i, x) in self.crossings.iter().enumerate() {
            let [a, b, c, d] = x.map(|l| l as usize);
            if vertex >> i & 1 == 0 {
                uf.union(a, b);
                uf.union(c, d);
            } else {
                uf.union(a, d);
                uf.union(b, c);
            }
        }
        let mut root_circle = vec![usize::MAX; total + 1];
        let mut circles: Vec<Vec<u32>> = Vec::new();
        let mut label_circle = vec![usize::MAX; total + 1];
        for l in 1..=total {
            let r = uf.find(l);
            if root_circle[r] == usize::MAX {
                root_circle[r] = circles.len();
                circles.push(Vec::new());
            }
            let ci = root_circle[r];
            circles[ci].push(l as u32);
            label_circle[l] = ci;
        }
        let special_index = label_circle[self.basepoint_label() as usize];
        Smoothing { vertex, n, circles, special_index, label_circle }
    }

    /// PD text in the input grammar, including the basepoint suffix.
    pub fn to_pd_string(&self) -> String {
        let mut items: Vec<String> =
            self.crossings.iter().map(|x| format!("X[{},{},{},{}]", x[0], x[1], x[2], x[3])).collect();
        items.extend(std::iter::repeat_n("U".to_string(), self.free_loops));
        format!("PD[{}]@{}", items.join(","), self.basepoint)
    }
}

/// Parses `PD[X[a,b,c,d],...,U,...]` (or bare `U`) with an optional
/// `@edge` / `@Uk` basepoint suffix.
pub fn parse_pd(text: &str) -> Result<LinkDiagram, DiagramError> {
    let syntax = |offset: usize, msg: &str| DiagramError::Syntax { offset, msg: msg.to_string() };
    let text = text.trim();
    let (body, bp) = match text.rfind('@') {
        Some(at) => (&text[..at], Some(text[at + 1..].parse::<Basepoint>()?)),
        None => (text, None),
    };
    let body = body.trim();
    let (inner, base_off) = if let Some(rest) = body.strip_prefix("PD[") {
        let rest = rest.strip_suffix(']').ok_or_else(|| syntax(body.len(), "missing closing ']'"))?;
        (rest, 3)
    } else {
        (body, 0)
    };

    let mut crossings = Vec::new();
    let mut loops = 0usize;
    let bytes: Vec<char> = inner.chars().collect();
    let mut pos = 0usize;
    let skip_ws = |pos: &mut usize| {
        while *pos < bytes.len() && bytes[*pos].is_whitespace() {
            *pos += 1;
        }
    };
    loop {
        skip_ws(&mut pos);
        if pos >= bytes.len() {
            if crossings.is_empty() && loops == 0 && !inner.trim().is_empty() {
                return Err(syntax(base_off + pos, "expected an item"));
            }
            break;
        }
        match bytes[pos] {
            'U' => {
                loops += 1;
                pos += 1;
            }
            'X' => {
                pos += 1;
                skip_ws(&mut pos);
                if bytes.get(pos) != Some(&'[') {
                    return Err(syntax(base_off + pos, "expected '['"));
                }
                pos += 1;
                let close = bytes[pos..]
                    .iter()
                    .position(|&c| c == ']')
                    .ok_or_else(|| syntax(base_off + pos, "unterminated crossing"))?;
                let nums: String = bytes[pos..pos + close].iter().collect();
                let parsed: Result<Vec<u32>, _> = nums.split(',').map(|s| s.trim().parse::<u32>()).collect();
                let parsed = parsed.map_err(|_| syntax(base_off + pos, "crossing labels must be integers"))?;
                let x: [u32; 4] = parsed
                    .try_into()
                    .map_err(|_| syntax(base_off + pos, "a crossing needs exactly 4 labels"))?;
                crossings.push(x);
                pos += close + 1;
            }
            _ => return Err(syntax(base_off + pos, "expected 'X[' or 'U'")),
        }
        skip_ws(&mut pos);
        if pos < bytes.len() {
            if bytes[pos] != ',' {
                return Err(syntax(base_off + pos, "expected ','"));
            }
            pos += 1;
        }
    }
    let d = LinkDiagram::new(crossings, loops)?;
    match bp {
        Some(bp) => d.with_basepoint(bp),
        None => Ok(d),
    }
}

pub fn crossing_signs(d: &LinkDiagram) -> CrossingSigns {
    d.crossing_signs()
}

pub fn resolve(d: &LinkDiagram, vertex: u64) -> Smoothing {
    d.resolve(vertex)
}

/// Solves for the over-strand direction of every crossing.
fn orient(crossings: &[[u32; 4]]) -> Result<Vec<bool>, DiagramError> {
    // Slot roles: true = the edge enters the crossing here (head).
    // Under slots are fixed: a is a head, c a tail. For over slots, with
    // variable v = "over runs d -> b": d is a head iff v, b is a head iff !v.
    #[derive(Clone, Copy)]
    enum Role {
        Fixed(bool),
        Var { crossing: usize, flip: bool },
    }
    let role = |c: usize, p: usize| match p {
        0 => Role::Fixed(true),
        2 => Role::Fixed(false),
        1 => Role::Var { crossing: c, flip: true },
        _ => Role::Var { crossing: c, flip: false },
    };
    let n = crossings.len();
    let mut slots: Vec<Vec<(usize, usize)>> = vec![Vec::new(); 2 * n + 1];
    for (c, x) in crossings.iter().enumerate() {
        for (p, &l) in x.iter().enumerate() {
            slots[l as usize].push((c, p));
        }
    }
    // Constraint graph on crossing variables: edges carry parity.
    let mut fixed: Vec<Option<bool>> = vec![None; n];
    let mut adj: Vec<Vec<(usize, bool, u32)>> = vec![Vec::new(); n];
    for l in 1..=2 * n as u32 {
        let (s1, s2) = (slots[l as usize][0], slots[l as usize][1]);
        match (role(s1.0, s1.1), role(s2.0, s2.1)) {
            (Role::Fixed(a), Role::Fixed(b)) => {
                if a == b {
                    return Err(DiagramError::Orientation(l));
                }
            }
            (Role::Fixed(a), Role::Var { crossing, flip }) | (Role::Var { crossing, flip }, Role::Fixed(a)) => {
                // head(var) = v xor flip must equal !a
                let want = !a ^ flip;
                match fixed[crossing] {
                    Some(v) if v != want => return Err(DiagramError::Orientation(l)),
                    _ => fixed[crossing] = Some(want),
                }
            }
            (Role::Var { crossing: c1, flip: f1 }, Role::Var { crossing: c2, flip: f2 }) => {
                // (v1 ^ f1) != (v2 ^ f2)  <=>  v1 ^ v2 = !(f1 ^ f2)
                let parity = !(f1 ^ f2);
                if c1 == c2 {
                    if parity {
                        return Err(DiagramError::Orientation(l));
                    }
                } else {
                    adj[c1].push((c2, parity, l));
                    adj[c2].push((c1, parity, l));
                }
            }
        }
    }
    let mut value: Vec<Option<bool>> = vec![None; n];
    let mut queue = VecDeque::new();
    let seed_order: Vec<usize> =
        (0..n).filter(|&c| fixed[c].is_some()).chain((0..n).filter(|&c| fixed[c].is_none())).collect();
    for start in seed_order {
        if value[start].is_some() {
            continue;
        }
        let v0 = fixed[start].unwrap_or_else(|| {
            // Unconstrained strand (only over-crossings): use the label order,
            // which follows the component for consecutively numbered codes.
            let [_, b, _, d] = crossings[start];
            b == d + 1 || d > b + 1
        });
        value[start] = Some(v0);
        queue.push_back(start);
        while let Some(c) = queue.pop_front() {
            let v = value[c].unwrap();
            if let Some(f) = fixed[c] {
                if f != v {
                    return Err(DiagramError::Orientation(crossings[c][1]));
                }
            }
            for &(o, parity, l) in &adj[c] {
                let want = v ^ parity;
                match value[o] {
                    Some(w) if w != want => return Err(DiagramError::Orientation(l)),
                    Some(_) => {}
                    None => {
                        value[o] = Some(want);
                        queue.push_back(o);
                    }
                }
            }
        }
    }
    Ok(value.into_iter().map(|v| v.unwrap()).collect())
}

/// Checks that the rotation system given by the PD code embeds in the
/// sphere: `V - E + F = 2` for every connected piece of the diagram.
fn check_planar(crossings: &[[u32; 4]]) -> Result<(), DiagramError> {
    let n = crossings.len();
    if n == 0 {
        return Ok(());
    }
    let mut ends: Vec<Vec<usize>> = vec![Vec::new(); 2 * n + 1];
    for (c, x) in crossings.iter().enumerate() {
        for (p, &l) in x.iter().enumerate() {
            ends[l as usize].push(4 * c + p);
        }
    }
    let other_end = |s: usize| {
        let l = crossings[s / 4][s % 4] as usize;
        let e = &ends[l];
        if e[0] == s {
            e[1]
        } else {
            e[0]
        }
    };
    let mut seen = vec![false; 4 * n];
    let mut faces = 0;
    for s0 in 0..4 * n {
        if seen[s0] {
            continue;
        }
        faces += 1;
        let mut s = s0;
        while !seen[s] {
            seen[s] = true;
            let t = other_end(s);
            s = t / 4 * 4 + (t % 4 + 1) % 4;
        }
    }
    let mut uf = UnionFind::new(n);
    for e in ends.iter().skip(1) {
        uf.union(e[0] / 4, e[1] / 4);
    }
    let pieces = (0..n).filter(|&c| uf.find(c) == c).count();
    let expected = n + 2 * pieces;
    if faces != expected {
        return Err(DiagramError::NotPlanar { faces, expected });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const RIGHT_TREFOIL: &str = "PD[X[4,2,5,1],X[6,4,1,3],X[2,6,3,5]]";
    const LEFT_TREFOIL: &str = "PD[X[1,4,2,5],X[3,6,4,1],X[5,2,6,3]]";

    #[test]
    fn parses_trefoil() {
        let d = parse_pd(RIGHT_TREFOIL).unwrap();
        assert_eq!(d.n_crossings(), 3);
        assert_eq!(d.n_labels(), 6);
        assert_eq!(d.basepoint(), Basepoint::Edge(1));
        assert_eq!(d.components(), 1);
    }

    #[test]
    fn parses_free_loop() {
        let d = parse_pd("U").unwrap();
        assert_eq!(d.n_crossings(), 0);
        assert_eq!(d.free_loops(), 1);
        let s = d.resolve(0);
        assert_eq!(s.circles.len(), 1);
        assert_eq!(s.special_index, 0);
        assert_eq!(crossing_signs(&d), CrossingSigns { n_plus: 0, n_minus: 0, signs: vec![] });
    }

    #[test]
    fn rejects_bad_codes() {
        assert!(matches!(parse_pd("PD[X[1,2,3,4]]"), Err(DiagramError::LabelRange { label: 3, .. })));
        assert!(matches!(parse_pd("PD[X[1,1,2,1]]"), Err(DiagramError::LabelMultiplicity { .. })));
        assert!(matches!(parse_pd("PD[X[1,1,2,2"), Err(DiagramError::Syntax { .. })));
        assert!(matches!(parse_pd("PD[Y[1,1,2,2]]"), Err(DiagramError::Syntax { .. })));
        assert!(matches!(parse_pd("PD[]"), Err(DiagramError::Empty)));
        // Two incoming under-strands on edge 1.
        assert!(matches!(parse_pd("PD[X[1,3,2,4],X[1,4,2,3]]"), Err(DiagramError::Orientation(_))));
    }

    #[test]
    fn rejects_nonplanar_code() {
        // Three two-edge strands, each pair crossing once: not realizable in the plane.
        let e = parse_pd("PD[X[1,4,2,3],X[3,6,4,5],X[5,2,6,1]]").unwrap_err();
        assert!(matches!(e, DiagramError::NotPlanar { .. }), "{e}");
    }

    #[test]
    fn trefoil_signs() {
        let r = crossing_signs(&parse_pd(RIGHT_TREFOIL).unwrap());
        assert_eq!((r.n_plus, r.n_minus), (3, 0));
        let l = crossing_signs(&parse_pd(LEFT_TREFOIL).unwrap());
        assert_eq!((l.n_plus, l.n_minus), (0, 3));
    }

    #[test]
    fn kink_sign_and_circles() {
        let d = parse_pd("PD[X[1,1,2,2]]").unwrap();
        assert_eq!(d.crossing_signs().n_plus, 1);
        assert_eq!(d.resolve(0).circles.len(), 2);
        assert_eq!(d.resolve(1).circles.len(), 1);
    }

    #[test]
    fn trefoil_resolutions() {
        let d = parse_pd(RIGHT_TREFOIL).unwrap();
        assert_eq!(d.resolve(0b000).circles.len(), 2);
        assert_eq!(d.resolve(0b111).circles.len(), 3);
    }

    #[test]
    fn basepoint_suffix() {
        let d = parse_pd("PD[X[1,1,2,2]]@2").unwrap();
        assert_eq!(d.basepoint(), Basepoint::Edge(2));
        assert!(parse_pd("PD[X[1,1,2,2]]@7").is_err());
        let u = parse_pd("U,U@U1").unwrap();
        assert_eq!(u.basepoint(), Basepoint::Loop(1));
        assert_eq!(u.resolve(0).special_index, 1);
        assert_eq!(parse_pd(&u.to_pd_string()).unwrap(), u);
    }
}
