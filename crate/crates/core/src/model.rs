//! Geometry and measurement model.
//!
//! Nodes are numbered `0..=N`. Node `0` is the self-localizing node, nodes
//! `1..=N_a` are auxiliary nodes at unknown positions and `N_a+1..=N` are
//! anchors. The parameter vector [`Theta`] stacks the unknown positions
//! `x_0, x_1, .., x_{N_a}`.
//!
//! Every ideal interarrival time is a signed sum of pairwise distances over
//! `c` plus a known delay, so a sequence is compiled once into [`Row`]s of
//! `(coefficient, pair)` terms. The dense [`SelectionMatrix`] over the
//! all-pairs distance vector is derived from the same rows.

use alloc::{format, string::String, vec, vec::Vec};
use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Propagation speed used when none is configured (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Relative singular value below which a direction counts as unobservable.
pub const RANK_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "UPPERCASE")
)]
pub enum Technique {
    /// Two-way ranging against anchors.
    Toa,
    /// Interarrival times of synchronized anchors.
    Tdoa,
    /// Interarrival times of a reply-after-receive schedule.
    Tdst,
}

impl Technique {
    pub fn name(self) -> &'static str {
        match self {
            Technique::Toa => "TOA",
            Technique::Tdoa => "TDOA",
            Technique::Tdst => "TDST",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    dim: usize,
    num_aux: usize,
    anchors: Vec<f64>,
    c: f64,
    delta: f64,
}

impl Network {
    /// Builds a network from anchor coordinates (nodes `N_a+1..=N` in order).
    pub fn new<P: AsRef<[f64]>>(
        dim: usize,
        num_aux: usize,
        anchors: &[P],
        c: f64,
        delta: f64,
    ) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidNetwork(format!("dimension must be 2 or 3, got {dim}")));
        }
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidNetwork(format!("propagation speed must be positive, got {c}")));
        }
        if !(delta >= 0.0) || !delta.is_finite() {
            return Err(Error::InvalidNetwork(format!("delay must be nonnegative, got {delta}")));
        }
        if num_aux + anchors.len() == 0 {
            return Err(Error::InvalidNetwork(String::from("network has no transmitting nodes")));
        }
        let mut flat = Vec::with_capacity(dim * anchors.len());
        for (k, a) in anchors.iter().enumerate() {
            let a = a.as_ref();
            if a.len() != dim {
                return Err(Error::InvalidNetwork(format!(
                    "anchor {} has {} coordinates, expected {dim}",
                    num_aux + 1 + k,
                    a.len()
                )));
            }
            if a.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidNetwork(format!(
                    "anchor {} has non-finite coordinates",
                    num_aux + 1 + k
                )));
            }
            flat.extend_from_slice(a);
        }
        Ok(Network { dim, num_aux, anchors: flat, c, delta })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_aux(&self) -> usize {
        self.num_aux
    }

    pub fn num_anchors(&self) -> usize {
        self.anchors.len() / self.dim
    }

    /// `N`: the number of transmitting nodes (auxiliary plus anchors).
    pub fn num_nodes(&self) -> usize {
        self.num_aux + self.num_anchors()
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Coordinates of the `k`-th anchor (zero-based, i.e. node `N_a + 1 + k`).
    pub fn anchor(&self, k: usize) -> &[f64] {
        &self.anchors[k * self.dim..(k + 1) * self.dim]
    }

    pub fn anchors(&self) -> impl Iterator<Item = &[f64]> {
        self.anchors.chunks_exact(self.dim)
    }

    /// Whether node `node` has an unknown position (node 0 or auxiliary).
    pub fn is_unknown(&self, node: usize) -> bool {
        node <= self.num_aux
    }

    pub fn theta_len(&self) -> usize {
        self.dim * (self.num_aux + 1)
    }

    pub fn rho_len(&self) -> usize {
        let n = self.num_nodes();
        n * (n + 1) / 2
    }

    /// Position of `node`, looked up in `theta` for unknown nodes.
    pub fn position<'a>(&'a self, theta: &'a Theta, node: usize) -> &'a [f64] {
        if self.is_unknown(node) {
            theta.node(node)
        } else {
            self.anchor(node - self.num_aux - 1)
        }
    }

    pub fn check_theta(&self, theta: &Theta) -> Result<()> {
        if theta.dim() != self.dim || theta.as_slice().len() != self.theta_len() {
            return Err(Error::InvalidTheta(format!(
                "expected {} coordinates of dimension {}, got {} of dimension {}",
                self.theta_len(),
                self.dim,
                theta.as_slice().len(),
                theta.dim()
            )));
        }
        Ok(())
    }
}

/// Flattened unknown positions `x_0, x_1, .., x_{N_a}`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Theta {
    dim: usize,
    coords: Vec<f64>,
}

impl Theta {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 || coords.is_empty() || coords.len() % dim != 0 {
            return Err(Error::InvalidTheta(format!(
                "{} coordinates do not split into points of dimension {dim}",
                coords.len()
            )));
        }
        if coords.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidTheta(String::from("non-finite coordinate")));
        }
        Ok(Theta { dim, coords })
    }

    /// Builds a parameter vector from one point per unknown node.
    pub fn from_points<P: AsRef<[f64]>>(points: &[P]) -> Result<Self> {
        let dim = points.first().map(|p| p.as_ref().len()).unwrap_or(0);
        if points.iter().any(|p| p.as_ref().len() != dim) {
            return Err(Error::InvalidTheta(String::from("points of mixed dimension")));
        }
        Theta::new(dim, points.iter().flat_map(|p| p.as_ref().iter().copied()).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_nodes(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn node(&self, k: usize) -> &[f64] {
        &self.coords[k * self.dim..(k + 1) * self.dim]
    }

    pub fn node_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.coords[k * self.dim..(k + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coords
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.coords
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.coords
    }
}

/// One signed distance term `coef * ||x_a - x_b||`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Term {
    pub coef: i8,
    pub a: usize,
    pub b: usize,
}

/// One measurement: `mu = (1/c) * sum(terms) + delta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Row {
    terms: [Term; 3],
    len: u8,
}

impl Row {
    fn new(terms: &[Term]) -> Self {
        let mut buf = [Term { coef: 0, a: 0, b: 0 }; 3];
        buf[..terms.len()].copy_from_slice(terms);
        Row { terms: buf, len: terms.len() as u8 }
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms[..self.len as usize]
    }
}

/// Ordered transmitter list plus the technique that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Sequence {
    nodes: Vec<usize>,
    technique: Technique,
    delay: Option<f64>,
    rows: Vec<Row>,
}

impl Sequence {
    pub fn new(technique: Technique, nodes: Vec<usize>) -> Result<Self> {
        if nodes.iter().any(|&k| k == 0) {
            return Err(Error::InvalidSequence(String::from(
                "node 0 is the receiver and cannot transmit",
            )));
        }
        let min_len = if technique == Technique::Toa { 1 } else { 2 };
        if nodes.len() < min_len {
            return Err(Error::InvalidSequence(format!(
                "{} needs at least {min_len} transmitters, got {}",
                technique.name(),
                nodes.len()
            )));
        }
        if technique != Technique::Toa {
            if let Some(w) = nodes.windows(2).find(|w| w[0] == w[1]) {
                return Err(Error::InvalidSequence(format!(
                    "{} sequence repeats node {} consecutively",
                    technique.name(),
                    w[0]
                )));
            }
        }
        let rows = match technique {
            Technique::Toa => nodes
                .iter()
                .map(|&i| Row::new(&[Term { coef: 2, a: i, b: 0 }]))
                .collect(),
            Technique::Tdoa => nodes
                .windows(2)
                .map(|w| {
                    Row::new(&[
                        Term { coef: -1, a: w[0], b: 0 },
                        Term { coef: 1, a: w[1], b: 0 },
                    ])
                })
                .collect(),
            Technique::Tdst => nodes
                .windows(2)
                .map(|w| {
                    Row::new(&[
                        Term { coef: 1, a: w[0], b: w[1] },
                        Term { coef: -1, a: w[0], b: 0 },
                        Term { coef: 1, a: w[1], b: 0 },
                    ])
                })
                .collect(),
        };
        Ok(Sequence { nodes, technique, delay: None, rows })
    }

    /// Overrides the network-wide transmission delay for this sequence.
    pub fn with_delay(mut self, delay: f64) -> Result<Self> {
        if !(delay >= 0.0) || !delay.is_finite() {
            return Err(Error::InvalidSequence(format!("delay must be nonnegative, got {delay}")));
        }
        self.delay = Some(delay);
        Ok(self)
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn technique(&self) -> Technique {
        self.technique
    }

    pub fn delay_override(&self) -> Option<f64> {
        self.delay
    }

    pub fn delay(&self, net: &Network) -> f64 {
        self.delay.unwrap_or(net.delta())
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn check_against(&self, net: &Network) -> Result<()> {
        let n = net.num_nodes();
        if let Some(&k) = self.nodes.iter().find(|&&k| k > n) {
            return Err(Error::InvalidSequence(format!(
                "node {k} out of range for a network with N = {n}"
            )));
        }
        Ok(())
    }
}

/// Position of the unordered pair `(a, b)` in the all-pairs distance vector.
///
/// For `i = 1..N` in turn the layout lists `(i,i+1), .., (i,N)` and then `(i,0)`.
pub fn rho_index(a: usize, b: usize, n: usize) -> Result<usize> {
    if a == b || a > n || b > n {
        return Err(Error::InvalidPair { a, b, n });
    }
    let (i, j) = if a == 0 || b == 0 {
        (a.max(b), 0)
    } else {
        (a.min(b), a.max(b))
    };
    // Block i starts after blocks 1..i-1, block k holding N - k + 1 entries.
    let offset = (i - 1) * (n + 1) - (i - 1) * i / 2;
    let within = if j == 0 { n - i } else { j - i - 1 };
    Ok(offset + within)
}

/// All pairwise distances in [`rho_index`] order.
pub fn build_rho(theta: &Theta, net: &Network) -> Result<Vec<f64>> {
    net.check_theta(theta)?;
    let n = net.num_nodes();
    let mut rho = vec![0.0; net.rho_len()];
    for i in 1..=n {
        for j in (i + 1..=n).chain(core::iter::once(0)) {
            rho[rho_index(i, j, n)?] = distance(net.position(theta, i), net.position(theta, j));
        }
    }
    Ok(rho)
}

/// Integer matrix mapping the distance vector to the sequence's measurements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<i8>,
}

impl SelectionMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> i8 {
        self.entries[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[i8] {
        &self.entries[r * self.cols..(r + 1) * self.cols]
    }

    pub fn to_nested(&self) -> Vec<Vec<i8>> {
        self.entries.chunks_exact(self.cols).map(|r| r.to_vec()).collect()
    }
}

pub fn build_selection_matrix(seq: &Sequence, n: usize) -> Result<SelectionMatrix> {
    if let Some(&k) = seq.nodes().iter().find(|&&k| k > n) {
        return Err(Error::InvalidSequence(format!(
            "node {k} out of range for a network with N = {n}"
        )));
    }
    let cols = n * (n + 1) / 2;
    let mut entries = vec![0i8; seq.num_rows() * cols];
    for (r, row) in seq.rows().iter().enumerate() {
        for t in row.terms() {
            entries[r * cols + rho_index(t.a, t.b, n)?] += t.coef;
        }
    }
    Ok(SelectionMatrix { rows: seq.num_rows(), cols, entries })
}

/// Ideal interarrival times `(1/c) M(s) rho(theta) + delta 1`, in seconds.
pub fn predict(seq: &Sequence, theta: &Theta, net: &Network) -> Result<Vec<f64>> {
    net.check_theta(theta)?;
    seq.check_against(net)?;
    let mut out = vec![0.0; seq.num_rows()];
    predict_into(seq, theta, net, &mut out);
    Ok(out)
}

/// Unchecked variant of [`predict`] writing into `out`.
pub(crate) fn predict_into(seq: &Sequence, theta: &Theta, net: &Network, out: &mut [f64]) {
    let delay = seq.delay(net);
    let inv_c = 1.0 / net.c();
    for (o, row) in out.iter_mut().zip(seq.rows()) {
        let sum: f64 = row
            .terms()
            .iter()
            .map(|t| f64::from(t.coef) * distance(net.position(theta, t.a), net.position(theta, t.b)))
            .sum();
        *o = sum * inv_c + delay;
    }
}

/// `d mu / d theta` as an `m x dim(theta)` matrix (seconds per meter).
pub fn jacobian(seq: &Sequence, theta: &Theta, net: &Network) -> Result<DMatrix<f64>> {
    net.check_theta(theta)?;
    seq.check_against(net)?;
    let mut jac = DMatrix::zeros(seq.num_rows(), net.theta_len());
    jacobian_into(seq, theta, net, &mut jac, 0, 1.0)?;
    Ok(jac)
}

/// Writes `scale * d mu / d theta` into rows `row0..row0+m` of `out`.
pub(crate) fn jacobian_into(
    seq: &Sequence,
    theta: &Theta,
    net: &Network,
    out: &mut DMatrix<f64>,
    row0: usize,
    scale: f64,
) -> Result<()> {
    let dim = net.dim();
    let inv_c = scale / net.c();
    for (r, row) in seq.rows().iter().enumerate() {
        for j in 0..out.ncols() {
            out[(row0 + r, j)] = 0.0;
        }
        for t in row.terms() {
            let a_unknown = net.is_unknown(t.a);
            let b_unknown = net.is_unknown(t.b);
            if !a_unknown && !b_unknown {
                continue;
            }
            let xa = net.position(theta, t.a);
            let xb = net.position(theta, t.b);
            let d = distance(xa, xb);
            if d == 0.0 {
                return Err(Error::SingularGeometry { a: t.a, b: t.b });
            }
            let w = f64::from(t.coef) * inv_c / d;
            for k in 0..dim {
                let g = w * (xa[k] - xb[k]);
                if a_unknown {
                    out[(row0 + r, t.a * dim + k)] += g;
                }
                if b_unknown {
                    out[(row0 + r, t.b * dim + k)] -= g;
                }
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Identifiability {
    pub identifiable: bool,
    pub rank: usize,
    /// Ratio of largest to smallest singular value; infinite when rank deficient.
    pub condition_number: f64,
}

/// Identifiability of `theta` from the stacked sequences.
///
/// Requires the anchors used by the sequences to span the space (otherwise
/// positions are ambiguous up to a reflection) and the stacked Jacobian to
/// have full column rank at `theta`.
pub fn check_identifiability(net: &Network, sequences: &[Sequence], theta: &Theta) -> Identifiability {
    let deficient = Identifiability { identifiable: false, rank: 0, condition_number: f64::INFINITY };
    if sequences.is_empty() || net.check_theta(theta).is_err() {
        return deficient;
    }
    if anchor_span(net, sequences) < net.dim() {
        return deficient;
    }
    let m: usize = sequences.iter().map(Sequence::num_rows).sum();
    let mut stacked = DMatrix::zeros(m, net.theta_len());
    let mut row0 = 0;
    for seq in sequences {
        if seq.check_against(net).is_err() {
            return deficient;
        }
        // Scaled by c so singular values are dimensionless.
        if jacobian_into(seq, theta, net, &mut stacked, row0, net.c()).is_err() {
            return deficient;
        }
        row0 += seq.num_rows();
    }
    let sv = stacked.singular_values();
    let max = sv.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return deficient;
    }
    let rank = sv.iter().filter(|&&s| s > RANK_THRESHOLD * max).count();
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    let full = rank == net.theta_len() && sv.len() == net.theta_len();
    Identifiability {
        identifiable: full,
        rank,
        condition_number: if full { max / min } else { f64::INFINITY },
    }
}

/// Affine dimension of the set of anchors appearing in `sequences`.
fn anchor_span(net: &Network, sequences: &[Sequence]) -> usize {
    let mut used: Vec<usize> = sequences
        .iter()
        .flat_map(|s| s.nodes().iter().copied())
        .filter(|&k| k >= 1 && k <= net.num_nodes() && !net.is_unknown(k))
        .collect();
    used.sort_unstable();
    used.dedup();
    let Some((&first, rest)) = used.split_first() else {
        return 0;
    };
    let origin = net.anchor(first - net.num_aux() - 1);
    let diffs = DMatrix::from_fn(rest.len(), net.dim(), |r, k| {
        net.anchor(rest[r] - net.num_aux() - 1)[k] - origin[k]
    });
    if diffs.nrows() == 0 {
        return 0;
    }
    let sv = diffs.singular_values();
    let max = sv.iter().copied().fold(0.0, f64::max);
    sv.iter().filter(|&&s| s > RANK_THRESHOLD * max && max > 0.0).count()
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    libm::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn example_net() -> (Network, Theta) {
        let net = Network::new(2, 0, &[[0.0, 0.0], [3.0, 4.0], [0.0, 8.0]], SPEED_OF_LIGHT, 0.0)
            .unwrap();
        (net, Theta::new(2, vec![0.0, 4.0]).unwrap())
    }

    #[test]
    fn rho_index_small_layout() {
        let expect = [((1, 2), 0), ((1, 3), 1), ((1, 0), 2), ((2, 3), 3), ((2, 0), 4), ((3, 0), 5)];
        for ((a, b), idx) in expect {
            assert_eq!(rho_index(a, b, 3).unwrap(), idx);
            assert_eq!(rho_index(b, a, 3).unwrap(), idx);
        }
    }

    #[test]
    fn rho_index_matches_enumeration() {
        for n in 1..=10 {
            let mut order = Vec::new();
            for i in 1..=n {
                for j in i + 1..=n {
                    order.push((i, j));
                }
                order.push((i, 0));
            }
            assert_eq!(order.len(), n * (n + 1) / 2);
            for (pos, &(a, b)) in order.iter().enumerate() {
                assert_eq!(rho_index(a, b, n).unwrap(), pos);
            }
        }
        assert_eq!(rho_index(5, 0, 8).unwrap(), 29);
    }

    #[test]
    fn rho_index_rejects_bad_pairs() {
        assert!(matches!(rho_index(2, 2, 3), Err(Error::InvalidPair { .. })));
        assert!(matches!(rho_index(0, 4, 3), Err(Error::InvalidPair { .. })));
    }

    #[test]
    fn rho_small_geometry() {
        let (net, theta) = example_net();
        let rho = build_rho(&theta, &net).unwrap();
        assert_eq!(rho, vec![5.0, 8.0, 4.0, 5.0, 3.0, 4.0]);
    }

    #[test]
    fn rho_coincident_nodes() {
        let net = Network::new(2, 0, &[[1.0, 1.0], [1.0, 1.0]], SPEED_OF_LIGHT, 0.0).unwrap();
        let theta = Theta::new(2, vec![1.0, 1.0]).unwrap();
        assert!(build_rho(&theta, &net).unwrap().iter().all(|&d| d == 0.0));
    }

    #[test]
    fn selection_matrices_of_worked_examples() {
        let toa = Sequence::new(Technique::Toa, vec![1, 2, 3]).unwrap();
        assert_eq!(
            build_selection_matrix(&toa, 3).unwrap().to_nested(),
            vec![vec![0, 0, 2, 0, 0, 0], vec![0, 0, 0, 0, 2, 0], vec![0, 0, 0, 0, 0, 2]]
        );
        let tdoa = Sequence::new(Technique::Tdoa, vec![1, 2, 3]).unwrap();
        assert_eq!(
            build_selection_matrix(&tdoa, 3).unwrap().to_nested(),
            vec![vec![0, 0, -1, 0, 1, 0], vec![0, 0, 0, 0, -1, 1]]
        );
        let tdst = Sequence::new(Technique::Tdst, vec![1, 2, 3, 1]).unwrap();
        assert_eq!(
            build_selection_matrix(&tdst, 3).unwrap().to_nested(),
            vec![vec![1, 0, -1, 0, 1, 0], vec![0, 0, 0, 1, -1, 1], vec![0, 1, 1, 0, 0, -1]]
        );
    }

    #[test]
    fn sequence_validation() {
        assert!(Sequence::new(Technique::Toa, vec![]).is_err());
        assert!(Sequence::new(Technique::Toa, vec![1, 1]).is_ok());
        assert!(Sequence::new(Technique::Tdoa, vec![1]).is_err());
        assert!(Sequence::new(Technique::Tdoa, vec![1, 1, 2]).is_err());
        assert!(Sequence::new(Technique::Tdst, vec![2, 0]).is_err());
        let seq = Sequence::new(Technique::Tdoa, vec![1, 4]).unwrap();
        assert!(build_selection_matrix(&seq, 3).is_err());
    }

    #[test]
    fn predict_toa_example() {
        let (net, theta) = example_net();
        let seq = Sequence::new(Technique::Toa, vec![1]).unwrap();
        let mu = predict(&seq, &theta, &net).unwrap();
        assert_relative_eq!(mu[0], 2.0 * 4.0 / SPEED_OF_LIGHT, max_relative = 1e-15);
    }

    #[test]
    fn predict_zero_and_symmetric_cases() {
        let net = Network::new(2, 0, &[[-1.0, 0.0], [1.0, 0.0]], SPEED_OF_LIGHT, 0.0).unwrap();
        let on_anchor = Theta::new(2, vec![-1.0, 0.0]).unwrap();
        let toa = Sequence::new(Technique::Toa, vec![1]).unwrap();
        assert_eq!(predict(&toa, &on_anchor, &net).unwrap()[0], 0.0);
        let mid = Theta::new(2, vec![0.0, 3.0]).unwrap();
        let tdoa = Sequence::new(Technique::Tdoa, vec![1, 2]).unwrap();
        assert_eq!(predict(&tdoa, &mid, &net).unwrap()[0], 0.0);
    }

    #[test]
    fn sequence_delay_override() {
        let (net, theta) = example_net();
        let seq = Sequence::new(Technique::Tdoa, vec![1, 2]).unwrap().with_delay(1e-6).unwrap();
        let plain = Sequence::new(Technique::Tdoa, vec![1, 2]).unwrap();
        let a = predict(&seq, &theta, &net).unwrap()[0];
        let b = predict(&plain, &theta, &net).unwrap()[0];
        assert_relative_eq!(a - b, 1e-6, max_relative = 1e-9);
        assert!(plain.clone().with_delay(-1.0).is_err());
    }

    #[test]
    fn jacobian_toa_far_field_norm() {
        let net = Network::new(2, 0, &[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], SPEED_OF_LIGHT, 0.0)
            .unwrap();
        let theta = Theta::new(2, vec![1e4, -3e4]).unwrap();
        let seq = Sequence::new(Technique::Toa, vec![1, 2, 3]).unwrap();
        let jac = jacobian(&seq, &theta, &net).unwrap();
        for r in 0..3 {
            let norm = libm::sqrt(jac[(r, 0)].powi(2) + jac[(r, 1)].powi(2));
            assert_relative_eq!(norm, 2.0 / SPEED_OF_LIGHT, max_relative = 1e-12);
        }
    }

    #[test]
    fn jacobian_singular_on_node() {
        let (net, _) = example_net();
        let theta = Theta::new(2, vec![3.0, 4.0]).unwrap();
        let seq = Sequence::new(Technique::Tdoa, vec![1, 2]).unwrap();
        assert_eq!(
            jacobian(&seq, &theta, &net),
            Err(Error::SingularGeometry { a: 2, b: 0 })
        );
    }

    #[test]
    fn jacobian_zero_block_for_unused_aux() {
        let net = Network::new(
            2,
            1,
            &[[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]],
            SPEED_OF_LIGHT,
            0.0,
        )
        .unwrap();
        let theta = Theta::new(2, vec![3.0, 3.0, -5.0, 5.0]).unwrap();
        let seq = Sequence::new(Technique::Tdst, vec![2, 3, 4]).unwrap();
        let jac = jacobian(&seq, &theta, &net).unwrap();
        for r in 0..2 {
            assert_eq!(jac[(r, 2)], 0.0);
            assert_eq!(jac[(r, 3)], 0.0);
        }
    }

    #[test]
    fn identifiability_cases() {
        let colinear =
            Network::new(2, 0, &[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]], SPEED_OF_LIGHT, 0.0).unwrap();
        let theta = Theta::new(2, vec![0.5, 3.0]).unwrap();
        let seq = Sequence::new(Technique::Tdoa, vec![1, 2, 3]).unwrap();
        assert!(!check_identifiability(&colinear, &[seq.clone()], &theta).identifiable);
        assert!(!check_identifiability(&colinear, &[], &theta).identifiable);
    }
}
