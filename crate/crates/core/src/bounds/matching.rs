//! Maximum-weight pairings of an index set.
//!
//! Small tables are solved by enumerating every partial matching. Larger
//! tables use the primal-dual blossom algorithm (Edmonds; Galil's survey
//! formulation) on floating-point weights, followed by a check of the dual
//! optimality certificate.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};

/// Largest table solved by exhaustive enumeration.
pub const ENUMERATION_LIMIT: usize = 10;

const VALUE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PairingMethod {
    ExactEnumeration,
    Blossom,
    /// Lower bound only; never used in assertions.
    Greedy,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairingResult {
    pub pairs: Vec<(usize, usize)>,
    pub value: f64,
    pub method: PairingMethod,
}

impl PairingResult {
    /// Checks disjointness, range and the stored value against `weights`.
    pub fn validate(&self, weights: &DMatrix<f64>) -> Result<()> {
        let d = weights.nrows();
        let mut used = vec![false; d];
        let mut total = 0.0;
        for &(k, l) in &self.pairs {
            if k >= d || l >= d {
                return Err(Error::InvalidPairing(format!(
                    "pair ({k}, {l}) out of range {d}"
                )));
            }
            if k == l || used[k] || used[l] {
                return Err(Error::InvalidPairing(format!("pair ({k}, {l}) overlaps")));
            }
            used[k] = true;
            used[l] = true;
            total += weights[(k, l)];
        }
        if (total - self.value).abs() > VALUE_TOL * total.abs().max(1.0) {
            return Err(Error::InvalidPairing(format!(
                "stored value {} differs from pair sum {total}",
                self.value
            )));
        }
        Ok(())
    }
}

/// Requires a square, symmetric, nonnegative table with zero diagonal.
pub fn check_weights(weights: &DMatrix<f64>) -> Result<()> {
    let d = weights.nrows();
    if weights.ncols() != d {
        return Err(Error::NotSquare {
            rows: d,
            cols: weights.ncols(),
        });
    }
    for i in 0..d {
        if weights[(i, i)] != 0.0 {
            return Err(Error::AsymmetricWeights { row: i, col: i });
        }
        for j in (i + 1)..d {
            let (a, b) = (weights[(i, j)], weights[(j, i)]);
            if a != b || a < 0.0 || !a.is_finite() {
                return Err(Error::AsymmetricWeights { row: i, col: j });
            }
        }
    }
    Ok(())
}

/// Maximum of `sum_{(k,l)} w_kl` over all sets of disjoint pairs.
pub fn max_pairing(weights: &DMatrix<f64>) -> Result<PairingResult> {
    check_weights(weights)?;
    if weights.nrows() <= ENUMERATION_LIMIT {
        Ok(enumerate_pairings(weights))
    } else {
        blossom_pairing(weights)
    }
}

/// Exhaustive search over all partial matchings.
pub fn enumerate_pairings(weights: &DMatrix<f64>) -> PairingResult {
    fn recurse(
        w: &DMatrix<f64>,
        used: &mut [bool],
        start: usize,
        current: &mut Vec<(usize, usize)>,
        value: f64,
        best: &mut (f64, Vec<(usize, usize)>),
    ) {
        let d = used.len();
        let Some(i) = (start..d).find(|&i| !used[i]) else {
            if value > best.0 {
                *best = (value, current.clone());
            }
            return;
        };
        used[i] = true;
        // i stays unpaired
        recurse(w, used, i + 1, current, value, best);
        for j in (i + 1)..d {
            if !used[j] {
                used[j] = true;
                current.push((i, j));
                recurse(w, used, i + 1, current, value + w[(i, j)], best);
                current.pop();
                used[j] = false;
            }
        }
        used[i] = false;
    }

    let d = weights.nrows();
    let mut best = (0.0, Vec::new());
    recurse(
        weights,
        &mut vec![false; d],
        0,
        &mut Vec::new(),
        0.0,
        &mut best,
    );
    let (value, pairs) = best;
    PairingResult {
        pairs,
        value,
        method: PairingMethod::ExactEnumeration,
    }
}

/// Repeatedly takes the heaviest remaining pair. A lower bound on the optimum.
pub fn greedy_pairing(weights: &DMatrix<f64>) -> Result<PairingResult> {
    check_weights(weights)?;
    let d = weights.nrows();
    let mut edges: Vec<(f64, usize, usize)> = Vec::new();
    for i in 0..d {
        for j in (i + 1)..d {
            if weights[(i, j)] > 0.0 {
                edges.push((weights[(i, j)], i, j));
            }
        }
    }
    edges.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut used = vec![false; d];
    let mut pairs = Vec::new();
    let mut value = 0.0;
    for (w, i, j) in edges {
        if !used[i] && !used[j] {
            used[i] = true;
            used[j] = true;
            pairs.push((i, j));
            value += w;
        }
    }
    Ok(PairingResult {
        pairs,
        value,
        method: PairingMethod::Greedy,
    })
}

/// Exact maximum-weight matching for any table size.
pub fn blossom_pairing(weights: &DMatrix<f64>) -> Result<PairingResult> {
    check_weights(weights)?;
    let d = weights.nrows();
    let mut edges = Vec::new();
    for i in 0..d {
        for j in (i + 1)..d {
            if weights[(i, j)] > 0.0 {
                edges.push((i, j, weights[(i, j)]));
            }
        }
    }
    if edges.is_empty() {
        return Ok(PairingResult {
            pairs: Vec::new(),
            value: 0.0,
            method: PairingMethod::Blossom,
        });
    }
    let mut solver = Blossom::new(d, edges);
    let mate = solver.solve();
    if !solver.certificate_holds() {
        if d <= SUBSET_DP_LIMIT {
            log::warn!("blossom certificate failed at d = {d}; using subset search");
            return Ok(subset_pairing(weights));
        }
        return Err(Error::InvalidPairing(
            "blossom matching failed its optimality certificate".into(),
        ));
    }
    let mut pairs = Vec::new();
    let mut value = 0.0;
    for (i, &m) in mate.iter().enumerate() {
        if m != NONE && i < m {
            pairs.push((i, m));
            value += weights[(i, m)];
        }
    }
    Ok(PairingResult {
        pairs,
        value,
        method: PairingMethod::Blossom,
    })
}

/// Largest table the subset search fallback accepts.
pub const SUBSET_DP_LIMIT: usize = 22;

/// Exact optimum by dynamic programming over subsets of used indices.
/// `O(2^d d)` time and memory.
pub fn subset_pairing(weights: &DMatrix<f64>) -> PairingResult {
    let d = weights.nrows();
    let full = (1usize << d) - 1;
    // best[mask]: optimum over the indices not in mask, where mask is
    // always a prefix-closed set of "decided" indices plus partners
    let mut best = vec![0.0f64; 1 << d];
    let mut choice = vec![NONE; 1 << d];
    for mask in (0..full).rev() {
        let i = (!mask).trailing_zeros() as usize;
        let skip = mask | (1 << i);
        let mut value = best[skip];
        let mut pick = NONE;
        for j in (i + 1)..d {
            if mask & (1 << j) == 0 && weights[(i, j)] > 0.0 {
                let v = weights[(i, j)] + best[skip | (1 << j)];
                if v > value {
                    value = v;
                    pick = j;
                }
            }
        }
        best[mask] = value;
        choice[mask] = pick;
    }
    let mut pairs = Vec::new();
    let mut mask = 0usize;
    while mask != full {
        let i = (!mask).trailing_zeros() as usize;
        mask |= 1 << i;
        let j = choice[mask & !(1 << i)];
        if j != NONE {
            pairs.push((i, j));
            mask |= 1 << j;
        }
    }
    let value = pairs.iter().map(|&(i, j)| weights[(i, j)]).sum();
    PairingResult {
        pairs,
        value,
        method: PairingMethod::ExactEnumeration,
    }
}

const NONE: usize = usize::MAX;

/// Primal-dual weighted matching. Vertex duals are stored doubled, edge
/// endpoints `2k` and `2k + 1` belong to edge `k`, blossoms are numbered
/// from `n` to `2n - 1`.
struct Blossom {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
    endpoint: Vec<usize>,
    neighbend: Vec<Vec<usize>>,
    mate: Vec<usize>,
    label: Vec<u8>,
    labelend: Vec<usize>,
    inblossom: Vec<usize>,
    blossomparent: Vec<usize>,
    blossomchilds: Vec<Vec<usize>>,
    blossombase: Vec<usize>,
    blossomendps: Vec<Vec<usize>>,
    bestedge: Vec<usize>,
    blossombestedges: Vec<Option<Vec<usize>>>,
    unusedblossoms: Vec<usize>,
    dualvar: Vec<f64>,
    allowedge: Vec<bool>,
    queue: Vec<usize>,
}

fn wrap(len: usize, j: isize) -> usize {
    if j >= 0 {
        j as usize
    } else {
        (len as isize + j) as usize
    }
}

impl Blossom {
    fn new(n: usize, edges: Vec<(usize, usize, f64)>) -> Self {
        let maxweight = edges.iter().map(|e| e.2).fold(0.0, f64::max);
        let endpoint = (0..2 * edges.len())
            .map(|p| {
                if p % 2 == 0 {
                    edges[p / 2].0
                } else {
                    edges[p / 2].1
                }
            })
            .collect();
        let mut neighbend = vec![Vec::new(); n];
        for (k, &(i, j, _)) in edges.iter().enumerate() {
            neighbend[i].push(2 * k + 1);
            neighbend[j].push(2 * k);
        }
        let mut blossombase: Vec<usize> = (0..n).collect();
        blossombase.extend(std::iter::repeat_n(NONE, n));
        let mut dualvar = vec![maxweight; n];
        dualvar.extend(std::iter::repeat_n(0.0, n));
        let nedge = edges.len();
        Self {
            n,
            edges,
            endpoint,
            neighbend,
            mate: vec![NONE; n],
            label: vec![0; 2 * n],
            labelend: vec![NONE; 2 * n],
            inblossom: (0..n).collect(),
            blossomparent: vec![NONE; 2 * n],
            blossomchilds: vec![Vec::new(); 2 * n],
            blossombase,
            blossomendps: vec![Vec::new(); 2 * n],
            bestedge: vec![NONE; 2 * n],
            blossombestedges: vec![None; 2 * n],
            unusedblossoms: (n..2 * n).collect(),
            dualvar,
            allowedge: vec![false; nedge],
            queue: Vec::new(),
        }
    }

    /// Twice the slack of edge `k`.
    fn slack(&self, k: usize) -> f64 {
        let (i, j, w) = self.edges[k];
        self.dualvar[i] + self.dualvar[j] - 2.0 * w
    }

    fn leaves(&self, b: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![b];
        while let Some(x) = stack.pop() {
            if x < self.n {
                out.push(x);
            } else {
                for &c in self.blossomchilds[x].iter().rev() {
                    stack.push(c);
                }
            }
        }
        out
    }

    fn assign_label(&mut self, w: usize, t: u8, p: usize) {
        let b = self.inblossom[w];
        self.label[w] = t;
        self.label[b] = t;
        self.labelend[w] = p;
        self.labelend[b] = p;
        self.bestedge[w] = NONE;
        self.bestedge[b] = NONE;
        if t == 1 {
            let leaves = self.leaves(b);
            self.queue.extend(leaves);
        } else if t == 2 {
            let base = self.blossombase[b];
            let mbase = self.mate[base];
            let ep = self.endpoint[mbase];
            self.assign_label(ep, 1, mbase ^ 1);
        }
    }

    fn scan_blossom(&mut self, v: usize, w: usize) -> usize {
        let mut path = Vec::new();
        let mut base = NONE;
        let (mut v, mut w) = (v, w);
        while v != NONE || w != NONE {
            let mut b = self.inblossom[v];
            if self.label[b] & 4 != 0 {
                base = self.blossombase[b];
                break;
            }
            path.push(b);
            self.label[b] = 5;
            if self.labelend[b] == NONE {
                v = NONE;
            } else {
                v = self.endpoint[self.labelend[b]];
                b = self.inblossom[v];
                v = self.endpoint[self.labelend[b]];
            }
            if w != NONE {
                std::mem::swap(&mut v, &mut w);
            }
        }
        for b in path {
            self.label[b] = 1;
        }
        base
    }

    fn add_blossom(&mut self, base: usize, k: usize) {
        let (mut v, mut w, _) = self.edges[k];
        let bb = self.inblossom[base];
        let mut bv = self.inblossom[v];
        let mut bw = self.inblossom[w];
        let b = self
            .unusedblossoms
            .pop()
            .expect("blossom numbers exhausted");
        self.blossombase[b] = base;
        self.blossomparent[b] = NONE;
        self.blossomparent[bb] = b;
        let mut childs = Vec::new();
        let mut endps = Vec::new();
        while bv != bb {
            self.blossomparent[bv] = b;
            childs.push(bv);
            endps.push(self.labelend[bv]);
            v = self.endpoint[self.labelend[bv]];
            bv = self.inblossom[v];
        }
        childs.push(bb);
        childs.reverse();
        endps.reverse();
        endps.push(2 * k);
        while bw != bb {
            self.blossomparent[bw] = b;
            childs.push(bw);
            endps.push(self.labelend[bw] ^ 1);
            w = self.endpoint[self.labelend[bw]];
            bw = self.inblossom[w];
        }
        self.blossomchilds[b] = childs;
        self.blossomendps[b] = endps;
        self.label[b] = 1;
        self.labelend[b] = self.labelend[bb];
        self.dualvar[b] = 0.0;
        for v in self.leaves(b) {
            if self.label[self.inblossom[v]] == 2 {
                self.queue.push(v);
            }
            self.inblossom[v] = b;
        }
        let mut bestedgeto = vec![NONE; 2 * self.n];
        for bv in self.blossomchilds[b].clone() {
            let nblists: Vec<Vec<usize>> = match self.blossombestedges[bv].take() {
                Some(list) => vec![list],
                None => self
                    .leaves(bv)
                    .into_iter()
                    .map(|v| self.neighbend[v].iter().map(|p| p / 2).collect())
                    .collect(),
            };
            for nblist in nblists {
                for k in nblist {
                    let (mut i, mut j, _) = self.edges[k];
                    if self.inblossom[j] == b {
                        std::mem::swap(&mut i, &mut j);
                    }
                    let bj = self.inblossom[j];
                    if bj != b
                        && self.label[bj] == 1
                        && (bestedgeto[bj] == NONE || self.slack(k) < self.slack(bestedgeto[bj]))
                    {
                        bestedgeto[bj] = k;
                    }
                }
            }
            self.bestedge[bv] = NONE;
        }
        let list: Vec<usize> = bestedgeto.into_iter().filter(|&k| k != NONE).collect();
        self.bestedge[b] = NONE;
        for &k in &list {
            if self.bestedge[b] == NONE || self.slack(k) < self.slack(self.bestedge[b]) {
                self.bestedge[b] = k;
            }
        }
        self.blossombestedges[b] = Some(list);
    }

    fn expand_blossom(&mut self, b: usize, endstage: bool) {
        for s in self.blossomchilds[b].clone() {
            self.blossomparent[s] = NONE;
            if s < self.n {
                self.inblossom[s] = s;
            } else if endstage && self.dualvar[s] == 0.0 {
                self.expand_blossom(s, endstage);
            } else {
                for v in self.leaves(s) {
                    self.inblossom[v] = s;
                }
            }
        }
        if !endstage && self.label[b] == 2 {
            let childs = self.blossomchilds[b].clone();
            let endps = self.blossomendps[b].clone();
            let len = childs.len();
            let entrychild = self.inblossom[self.endpoint[self.labelend[b] ^ 1]];
            let mut j = childs.iter().position(|&c| c == entrychild).unwrap() as isize;
            let (jstep, endptrick): (isize, usize) = if j & 1 != 0 {
                j -= len as isize;
                (1, 0)
            } else {
                (-1, 1)
            };
            let mut p = self.labelend[b];
            while j != 0 {
                self.label[self.endpoint[p ^ 1]] = 0;
                let q = endps[wrap(len, j - endptrick as isize)] ^ endptrick ^ 1;
                self.label[self.endpoint[q]] = 0;
                let ep = self.endpoint[p ^ 1];
                self.assign_label(ep, 2, p);
                self.allowedge[endps[wrap(len, j - endptrick as isize)] / 2] = true;
                j += jstep;
                p = endps[wrap(len, j - endptrick as isize)] ^ endptrick;
                self.allowedge[p / 2] = true;
                j += jstep;
            }
            let bv = childs[wrap(len, j)];
            self.label[self.endpoint[p ^ 1]] = 2;
            self.label[bv] = 2;
            self.labelend[self.endpoint[p ^ 1]] = p;
            self.labelend[bv] = p;
            self.bestedge[bv] = NONE;
            j += jstep;
            while childs[wrap(len, j)] != entrychild {
                let bv = childs[wrap(len, j)];
                if self.label[bv] == 1 {
                    j += jstep;
                    continue;
                }
                let leaves = self.leaves(bv);
                let reached = leaves.iter().copied().find(|&v| self.label[v] != 0);
                if let Some(v) = reached {
                    self.label[v] = 0;
                    let m = self.endpoint[self.mate[self.blossombase[bv]]];
                    self.label[m] = 0;
                    let le = self.labelend[v];
                    self.assign_label(v, 2, le);
                }
                j += jstep;
            }
        }
        self.label[b] = 0;
        self.labelend[b] = NONE;
        self.blossomchilds[b].clear();
        self.blossomendps[b].clear();
        self.blossombase[b] = NONE;
        self.blossombestedges[b] = None;
        self.bestedge[b] = NONE;
        self.unusedblossoms.push(b);
    }

    fn augment_blossom(&mut self, b: usize, v: usize) {
        let mut t = v;
        while self.blossomparent[t] != b {
            t = self.blossomparent[t];
        }
        if t >= self.n {
            self.augment_blossom(t, v);
        }
        let len = self.blossomchilds[b].len();
        let i = self.blossomchilds[b].iter().position(|&c| c == t).unwrap();
        let mut j = i as isize;
        let (jstep, endptrick): (isize, usize) = if i & 1 != 0 {
            j -= len as isize;
            (1, 0)
        } else {
            (-1, 1)
        };
        while j != 0 {
            j += jstep;
            let t = self.blossomchilds[b][wrap(len, j)];
            let p = self.blossomendps[b][wrap(len, j - endptrick as isize)] ^ endptrick;
            if t >= self.n {
                let ep = self.endpoint[p];
                self.augment_blossom(t, ep);
            }
            j += jstep;
            let t = self.blossomchilds[b][wrap(len, j)];
            if t >= self.n {
                let ep = self.endpoint[p ^ 1];
                self.augment_blossom(t, ep);
            }
            self.mate[self.endpoint[p]] = p ^ 1;
            self.mate[self.endpoint[p ^ 1]] = p;
        }
        self.blossomchilds[b].rotate_left(i);
        self.blossomendps[b].rotate_left(i);
        self.blossombase[b] = self.blossombase[self.blossomchilds[b][0]];
        debug_assert_eq!(self.blossombase[b], v);
    }

    fn augment_matching(&mut self, k: usize) {
        let (v, w, _) = self.edges[k];
        for (s0, p0) in [(v, 2 * k + 1), (w, 2 * k)] {
            let (mut s, mut p) = (s0, p0);
            loop {
                let bs = self.inblossom[s];
                if bs >= self.n {
                    self.augment_blossom(bs, s);
                }
                self.mate[s] = p;
                if self.labelend[bs] == NONE {
                    break;
                }
                let t = self.endpoint[self.labelend[bs]];
                let bt = self.inblossom[t];
                s = self.endpoint[self.labelend[bt]];
                let j = self.endpoint[self.labelend[bt] ^ 1];
                if bt >= self.n {
                    self.augment_blossom(bt, j);
                }
                self.mate[j] = self.labelend[bt];
                p = self.labelend[bt] ^ 1;
            }
        }
    }

    fn solve(&mut self) -> Vec<usize> {
        let n = self.n;
        for _stage in 0..n {
            self.label.iter_mut().for_each(|l| *l = 0);
            self.bestedge.iter_mut().for_each(|e| *e = NONE);
            for b in n..2 * n {
                self.blossombestedges[b] = None;
            }
            self.allowedge.iter_mut().for_each(|a| *a = false);
            self.queue.clear();
            for v in 0..n {
                if self.mate[v] == NONE && self.label[self.inblossom[v]] == 0 {
                    self.assign_label(v, 1, NONE);
                }
            }
            let mut augmented = false;
            loop {
                while !augmented {
                    let Some(v) = self.queue.pop() else { break };
                    for p in self.neighbend[v].clone() {
                        let k = p / 2;
                        let w = self.endpoint[p];
                        if self.inblossom[v] == self.inblossom[w] {
                            continue;
                        }
                        let mut kslack = 0.0;
                        if !self.allowedge[k] {
                            kslack = self.slack(k);
                            if kslack <= 0.0 {
                                self.allowedge[k] = true;
                            }
                        }
                        if self.allowedge[k] {
                            if self.label[self.inblossom[w]] == 0 {
                                self.assign_label(w, 2, p ^ 1);
                            } else if self.label[self.inblossom[w]] == 1 {
                                let base = self.scan_blossom(v, w);
                                if base != NONE {
                                    self.add_blossom(base, k);
                                } else {
                                    self.augment_matching(k);
                                    augmented = true;
                                    break;
                                }
                            } else if self.label[w] == 0 {
                                self.label[w] = 2;
                                self.labelend[w] = p ^ 1;
                            }
                        } else if self.label[self.inblossom[w]] == 1 {
                            let b = self.inblossom[v];
                            if self.bestedge[b] == NONE || kslack < self.slack(self.bestedge[b]) {
                                self.bestedge[b] = k;
                            }
                        } else if self.label[w] == 0
                            && (self.bestedge[w] == NONE || kslack < self.slack(self.bestedge[w]))
                        {
                            self.bestedge[w] = k;
                        }
                    }
                }
                if augmented {
                    break;
                }

                // delta1: smallest vertex dual (the matching need not be perfect)
                let mut deltatype = 1;
                let mut delta = self.dualvar[..n]
                    .iter()
                    .copied()
                    .fold(f64::INFINITY, f64::min);
                let mut deltaedge = NONE;
                let mut deltablossom = NONE;
                // delta2: S-vertex to free vertex
                for v in 0..n {
                    if self.label[self.inblossom[v]] == 0 && self.bestedge[v] != NONE {
                        let d = self.slack(self.bestedge[v]);
                        if d < delta {
                            delta = d;
                            deltatype = 2;
                            deltaedge = self.bestedge[v];
                        }
                    }
                }
                // delta3: half the slack between two S-blossoms
                for b in 0..2 * n {
                    if self.blossomparent[b] == NONE
                        && self.label[b] == 1
                        && self.bestedge[b] != NONE
                    {
                        let d = self.slack(self.bestedge[b]) / 2.0;
                        if d < delta {
                            delta = d;
                            deltatype = 3;
                            deltaedge = self.bestedge[b];
                        }
                    }
                }
                // delta4: smallest dual of a T-blossom
                for b in n..2 * n {
                    if self.blossombase[b] != NONE
                        && self.blossomparent[b] == NONE
                        && self.label[b] == 2
                        && self.dualvar[b] < delta
                    {
                        delta = self.dualvar[b];
                        deltatype = 4;
                        deltablossom = b;
                    }
                }

                for v in 0..n {
                    match self.label[self.inblossom[v]] {
                        1 => self.dualvar[v] -= delta,
                        2 => self.dualvar[v] += delta,
                        _ => {}
                    }
                }
                for b in n..2 * n {
                    if self.blossombase[b] != NONE && self.blossomparent[b] == NONE {
                        match self.label[b] {
                            1 => self.dualvar[b] += delta,
                            2 => self.dualvar[b] -= delta,
                            _ => {}
                        }
                    }
                }

                match deltatype {
                    1 => break,
                    2 => {
                        self.allowedge[deltaedge] = true;
                        let (mut i, j, _) = self.edges[deltaedge];
                        if self.label[self.inblossom[i]] == 0 {
                            i = j;
                        }
                        self.queue.push(i);
                    }
                    3 => {
                        self.allowedge[deltaedge] = true;
                        let (i, _, _) = self.edges[deltaedge];
                        self.queue.push(i);
                    }
                    _ => self.expand_blossom(deltablossom, false),
                }
            }
            if !augmented {
                break;
            }
            for b in n..2 * n {
                if self.blossomparent[b] == NONE
                    && self.blossombase[b] != NONE
                    && self.label[b] == 1
                    && self.dualvar[b] == 0.0
                {
                    self.expand_blossom(b, true);
                }
            }
        }
        (0..n)
            .map(|v| {
                if self.mate[v] == NONE {
                    NONE
                } else {
                    self.endpoint[self.mate[v]]
                }
            })
            .collect()
    }

    /// Complementary slackness for the final primal/dual pair, up to rounding.
    fn certificate_holds(&self) -> bool {
        let n = self.n;
        let scale = self
            .edges
            .iter()
            .map(|e| e.2)
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        let tol = 1e-9 * scale;
        if self.dualvar.iter().any(|&u| u < -tol) {
            return false;
        }
        let chain = |mut v: usize| {
            let mut out = vec![v];
            while self.blossomparent[v] != NONE {
                v = self.blossomparent[v];
                out.push(v);
            }
            out.reverse();
            out
        };
        for (k, &(i, j, w)) in self.edges.iter().enumerate() {
            let mut s = self.dualvar[i] + self.dualvar[j] - 2.0 * w;
            for (bi, bj) in chain(i).into_iter().zip(chain(j)) {
                if bi != bj {
                    break;
                }
                s += 2.0 * self.dualvar[bi];
            }
            if s < -tol {
                return false;
            }
            let matched_i = self.mate[i] != NONE && self.mate[i] / 2 == k;
            let matched_j = self.mate[j] != NONE && self.mate[j] / 2 == k;
            if matched_i != matched_j || (matched_i && s.abs() > tol) {
                return false;
            }
        }
        if (0..n).any(|v| self.mate[v] == NONE && self.dualvar[v].abs() > tol) {
            return false;
        }
        for b in n..2 * n {
            if self.blossombase[b] != NONE && self.dualvar[b] > tol {
                let endps = &self.blossomendps[b];
                if endps.len() % 2 != 1 {
                    return false;
                }
                for (ix, &p) in endps.iter().enumerate() {
                    if ix % 2 == 1
                        && (self.mate[self.endpoint[p]] != p ^ 1
                            || self.mate[self.endpoint[p ^ 1]] != p)
                    {
                        return false;
                    }
                }
            }
        }
        true
    }
}
