//! Hierarchical compression of collocation operators.
//!
//! The flattened `MNP x MNP` operator is reordered by a binary cluster tree
//! over the collocation points. Pairs of clusters whose bounding boxes are
//! well separated are stored as adaptive-cross-approximation (ACA) factors,
//! the remaining leaf pairs as dense blocks. The same tree serves rows and
//! columns since targets and sources are the same points.

use std::fmt::Write as _;
use std::time::Instant;

use crate::collocation::PointSet;
use crate::error::{Error, Result};
use crate::rbf::{self, HelmholtzProblem, MqKernel};
use crate::tensor::{dot, Shape3, Tensor3};

/// Axis-parallel box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl BoundingBox {
    pub fn new(min: [f64; 3], max: [f64; 3]) -> Self {
        BoundingBox { min, max }
    }

    fn of<'a>(mut pts: impl Iterator<Item = &'a [f64; 3]>) -> Self {
        let first = *pts.next().expect("nonempty cluster");
        let mut b = BoundingBox::new(first, first);
        for p in pts {
            for a in 0..3 {
                b.min[a] = b.min[a].min(p[a]);
                b.max[a] = b.max[a].max(p[a]);
            }
        }
        b
    }

    /// Length of the box diagonal.
    pub fn diameter(&self) -> f64 {
        (0..3)
            .map(|a| (self.max[a] - self.min[a]).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Euclidean distance between the two boxes (0 when they overlap).
    pub fn distance(&self, other: &BoundingBox) -> f64 {
        (0..3)
            .map(|a| {
                let gap = (other.min[a] - self.max[a]).max(self.min[a] - other.max[a]);
                gap.max(0.0).powi(2)
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn center(&self) -> [f64; 3] {
        [
            0.5 * (self.min[0] + self.max[0]),
            0.5 * (self.min[1] + self.max[1]),
            0.5 * (self.min[2] + self.max[2]),
        ]
    }

    pub fn contains(&self, p: &[f64; 3]) -> bool {
        (0..3).all(|a| self.min[a] <= p[a] && p[a] <= self.max[a])
    }

    fn longest_axis(&self) -> usize {
        let ext = [
            self.max[0] - self.min[0],
            self.max[1] - self.min[1],
            self.max[2] - self.min[2],
        ];
        let mut best = 0;
        for a in 1..3 {
            if ext[a] > ext[best] {
                best = a;
            }
        }
        best
    }
}

/// Node of the cluster tree; `start..end` indexes the tree permutation.
#[derive(Debug, Clone)]
pub struct ClusterNode {
    pub start: usize,
    pub end: usize,
    pub bbox: BoundingBox,
    pub children: Option<Box<[ClusterNode; 2]>>,
}

impl ClusterNode {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }

    pub fn depth(&self) -> usize {
        match &self.children {
            None => 0,
            Some(c) => 1 + c[0].depth().max(c[1].depth()),
        }
    }

    pub fn leaves(&self) -> Vec<&ClusterNode> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a ClusterNode>) {
        match &self.children {
            None => out.push(self),
            Some(c) => {
                c[0].collect_leaves(out);
                c[1].collect_leaves(out);
            }
        }
    }
}

/// Cluster tree with its permutation: `perm[t]` is the flattened point
/// index stored at tree position `t`.
#[derive(Debug, Clone)]
pub struct ClusterTree {
    pub root: ClusterNode,
    pub perm: Vec<usize>,
}

/// Median splits along the longest bounding-box axis until a cluster holds
/// at most `leaf_threshold` points.
pub fn build_cluster_tree(points: &PointSet, leaf_threshold: usize) -> Result<ClusterTree> {
    if points.is_empty() {
        return Err(Error::InvalidArgument("empty point set".into()));
    }
    if leaf_threshold == 0 {
        return Err(Error::InvalidArgument("leaf threshold must be >= 1".into()));
    }
    let pos: Vec<[f64; 3]> = points.points().iter().map(|p| p.pos).collect();
    let mut perm: Vec<usize> = (0..pos.len()).collect();
    let root = split(&pos, &mut perm, 0, leaf_threshold);
    Ok(ClusterTree { root, perm })
}

fn split(pos: &[[f64; 3]], perm: &mut [usize], offset: usize, leaf: usize) -> ClusterNode {
    let bbox = BoundingBox::of(perm.iter().map(|&i| &pos[i]));
    let n = perm.len();
    if n <= leaf {
        return ClusterNode {
            start: offset,
            end: offset + n,
            bbox,
            children: None,
        };
    }
    let axis = bbox.longest_axis();
    perm.sort_by(|&a, &b| pos[a][axis].total_cmp(&pos[b][axis]).then(a.cmp(&b)));
    let mid = n / 2;
    let (lo, hi) = perm.split_at_mut(mid);
    let left = split(pos, lo, offset, leaf);
    let right = split(pos, hi, offset + mid, leaf);
    ClusterNode {
        start: offset,
        end: offset + n,
        bbox,
        children: Some(Box::new([left, right])),
    }
}

/// `max(diam a, diam b) <= eta · dist(a, b)`, false for touching boxes.
pub fn admissible(a: &ClusterNode, b: &ClusterNode, eta: f64) -> bool {
    boxes_admissible(&a.bbox, &b.bbox, eta)
}

pub fn boxes_admissible(a: &BoundingBox, b: &BoundingBox, eta: f64) -> bool {
    let dist = a.distance(b);
    dist > 0.0 && a.diameter().max(b.diameter()) <= eta * dist
}

/// Low-rank block `u v^T` stored as `rank` column pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct LowRankBlock {
    rows: usize,
    cols: usize,
    u: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl LowRankBlock {
    pub fn zero(rows: usize, cols: usize) -> Self {
        LowRankBlock {
            rows,
            cols,
            u: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn rank(&self) -> usize {
        self.u.len()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn u_factor(&self) -> &[Vec<f64>] {
        &self.u
    }

    pub fn v_factor(&self) -> &[Vec<f64>] {
        &self.v
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.u.iter().zip(&self.v).map(|(u, v)| u[i] * v[j]).sum()
    }

    /// Row-major dense expansion.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.rows * self.cols];
        for (u, v) in self.u.iter().zip(&self.v) {
            for i in 0..self.rows {
                let ui = u[i];
                for (o, &vj) in out[i * self.cols..(i + 1) * self.cols].iter_mut().zip(v) {
                    *o += ui * vj;
                }
            }
        }
        out
    }

    fn apply_add(&self, x: &[f64], y: &mut [f64]) {
        for (u, v) in self.u.iter().zip(&self.v) {
            let t = dot(v, x);
            for (yi, ui) in y.iter_mut().zip(u) {
                *yi += t * ui;
            }
        }
    }

    fn apply_transpose_add(&self, x: &[f64], y: &mut [f64]) {
        for (u, v) in self.u.iter().zip(&self.v) {
            let t = dot(u, x);
            for (yj, vj) in y.iter_mut().zip(v) {
                *yj += t * vj;
            }
        }
    }

    fn floats(&self) -> usize {
        self.rank() * (self.rows + self.cols)
    }
}

#[derive(Debug, Clone)]
pub struct AcaResult {
    pub block: LowRankBlock,
    /// False when `max_rank` was hit before the stopping test passed.
    pub converged: bool,
}

/// Partially pivoted adaptive cross approximation of the block with local
/// entries `entry(i, j)`, `i < n_rows`, `j < n_cols`.
///
/// Starts from row `first_row`. Each step takes the residual row, pivots on
/// its largest entry, takes the matching residual column and appends the
/// cross; the next row is the largest unused entry of that column. Rows whose
/// residual vanishes are skipped. Stops when `|u_k| |v_k| <= tol |S_k|_F`
/// with the Frobenius norm of the running approximation `S_k` updated
/// incrementally.
pub fn aca(
    entry: impl Fn(usize, usize) -> f64,
    n_rows: usize,
    n_cols: usize,
    tol: f64,
    max_rank: usize,
    first_row: usize,
) -> Result<AcaResult> {
    if n_rows == 0 || n_cols == 0 {
        return Err(Error::InvalidArgument("ACA needs a nonempty block".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "ACA tolerance must be positive, got {tol}"
        )));
    }
    let mut block = LowRankBlock::zero(n_rows, n_cols);
    let mut used_rows = vec![false; n_rows];
    let mut used_cols = vec![false; n_cols];
    let mut approx_norm2 = 0.0f64;
    let mut row = first_row.min(n_rows - 1);
    let mut unused = n_rows;

    loop {
        if block.rank() >= max_rank {
            return Ok(AcaResult {
                block,
                converged: false,
            });
        }
        used_rows[row] = true;
        unused -= 1;

        let mut r: Vec<f64> = (0..n_cols).map(|j| entry(row, j)).collect();
        for (u, v) in block.u.iter().zip(&block.v) {
            let ur = u[row];
            if ur != 0.0 {
                for (rj, vj) in r.iter_mut().zip(v) {
                    *rj -= ur * vj;
                }
            }
        }
        let (pcol, pval) = r
            .iter()
            .enumerate()
            .filter(|(j, _)| !used_cols[*j])
            .map(|(j, v)| (j, v.abs()))
            .fold(
                (usize::MAX, 0.0),
                |acc, c| if c.1 > acc.1 { c } else { acc },
            );

        let zero_row =
            pcol == usize::MAX || pval == 0.0 || pval <= f64::EPSILON * approx_norm2.sqrt();
        if zero_row {
            match (0..n_rows).find(|&i| !used_rows[i]) {
                Some(next) if unused > 0 => {
                    row = next;
                    continue;
                }
                _ => {
                    return Ok(AcaResult {
                        block,
                        converged: true,
                    })
                }
            }
        }
        used_cols[pcol] = true;
        let pivot = r[pcol];
        let v: Vec<f64> = r.iter().map(|x| x / pivot).collect();
        let mut u: Vec<f64> = (0..n_rows).map(|i| entry(i, pcol)).collect();
        for (uk, vk) in block.u.iter().zip(&block.v) {
            let vp = vk[pcol];
            if vp != 0.0 {
                for (ui, uki) in u.iter_mut().zip(uk) {
                    *ui -= vp * uki;
                }
            }
        }

        let u2 = dot(&u, &u);
        let v2 = dot(&v, &v);
        let mut cross = 0.0;
        for (uk, vk) in block.u.iter().zip(&block.v) {
            cross += dot(&u, uk) * dot(&v, vk);
        }
        approx_norm2 = (approx_norm2 + 2.0 * cross + u2 * v2).max(0.0);

        let next_row = u
            .iter()
            .enumerate()
            .filter(|(i, _)| !used_rows[*i])
            .map(|(i, x)| (i, x.abs()))
            .fold(
                (usize::MAX, -1.0),
                |acc, c| if c.1 > acc.1 { c } else { acc },
            )
            .0;
        block.u.push(u);
        block.v.push(v);

        if (u2 * v2).sqrt() <= tol * approx_norm2.sqrt() {
            return Ok(AcaResult {
                block,
                converged: true,
            });
        }
        if next_row == usize::MAX || block.rank() >= n_cols {
            return Ok(AcaResult {
                block,
                converged: true,
            });
        }
        row = next_row;
    }
}

#[derive(Debug, Clone)]
pub enum BlockPayload {
    /// Row-major `|I| x |J|` entries.
    Dense(Vec<f64>),
    LowRank(LowRankBlock),
}

#[derive(Debug, Clone)]
pub struct HBlock {
    pub rows: (usize, usize),
    pub cols: (usize, usize),
    pub admissible: bool,
    pub payload: BlockPayload,
}

impl HBlock {
    fn n_rows(&self) -> usize {
        self.rows.1 - self.rows.0
    }

    fn n_cols(&self) -> usize {
        self.cols.1 - self.cols.0
    }
}

/// Parameters of the hierarchical assembly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HParams {
    pub eta: f64,
    pub aca_tol: f64,
    pub leaf_threshold: usize,
}

impl HParams {
    pub const DEFAULT_ETA: f64 = 2.0;
    pub const DEFAULT_ACA_TOL: f64 = 1e-6;
    pub const DEFAULT_LEAF_T: f64 = 5.0;

    /// `ceil(t_leaf · (ln M + ln N + ln P)^{3/2})`, at least 1.
    pub fn leaf_threshold_for(shape: Shape3, t_leaf: f64) -> usize {
        let s = (shape.m as f64).ln() + (shape.n as f64).ln() + (shape.p as f64).ln();
        ((t_leaf * s.powf(1.5)).ceil() as usize).max(1)
    }

    pub fn defaults_for(shape: Shape3) -> Self {
        HParams {
            eta: Self::DEFAULT_ETA,
            aca_tol: Self::DEFAULT_ACA_TOL,
            leaf_threshold: Self::leaf_threshold_for(shape, Self::DEFAULT_LEAF_T),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CompressionStats {
    pub n_points: usize,
    pub dense_blocks: usize,
    pub lowrank_blocks: usize,
    /// Admissible blocks stored dense because ACA did not converge.
    pub densified_blocks: usize,
    pub max_rank: usize,
    pub mean_rank: f64,
    pub bytes: usize,
    pub dense_equivalent_bytes: usize,
    pub build_seconds: f64,
    pub tree_depth: usize,
    pub leaf_threshold: usize,
    pub eta: f64,
    pub aca_tol: f64,
}

impl CompressionStats {
    pub fn compression_ratio(&self) -> f64 {
        self.bytes as f64 / self.dense_equivalent_bytes as f64
    }

    /// Plain-text `key = value` report.
    pub fn to_report(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "n_points = {}", self.n_points);
        let _ = writeln!(s, "eta = {}", self.eta);
        let _ = writeln!(s, "aca_tol = {:e}", self.aca_tol);
        let _ = writeln!(s, "leaf_threshold = {}", self.leaf_threshold);
        let _ = writeln!(s, "tree_depth = {}", self.tree_depth);
        let _ = writeln!(s, "dense_blocks = {}", self.dense_blocks);
        let _ = writeln!(s, "lowrank_blocks = {}", self.lowrank_blocks);
        let _ = writeln!(s, "densified_blocks = {}", self.densified_blocks);
        let _ = writeln!(s, "max_rank = {}", self.max_rank);
        let _ = writeln!(s, "mean_rank = {:.3}", self.mean_rank);
        let _ = writeln!(s, "bytes = {}", self.bytes);
        let _ = writeln!(
            s,
            "dense_equivalent_bytes = {}",
            self.dense_equivalent_bytes
        );
        let _ = writeln!(s, "compression_ratio = {:.6}", self.compression_ratio());
        let _ = writeln!(s, "build_seconds = {:.6}", self.build_seconds);
        s
    }
}

/// Hierarchical operator with the same apply contract as
/// [`crate::tensor::Operator6`].
#[derive(Debug, Clone)]
pub struct HOperator {
    shape: Shape3,
    tree: ClusterTree,
    blocks: Vec<HBlock>,
    params: HParams,
    stats: CompressionStats,
}

/// Compresses the operator tensor when `problem` is given, the system
/// tensor otherwise.
pub fn assemble_hmatrix(
    points: &PointSet,
    kernel: &MqKernel,
    problem: Option<&HelmholtzProblem>,
    params: HParams,
) -> Result<HOperator> {
    if !(params.eta > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "eta must be positive, got {}",
            params.eta
        )));
    }
    if let Some(problem) = problem {
        rbf::check_normals(problem, points)?;
    }
    let start = Instant::now();
    let tree = build_cluster_tree(points, params.leaf_threshold)?;
    let perm = &tree.perm;
    let entry = |r: usize, c: usize| -> f64 {
        match problem {
            Some(pb) => rbf::operator_entry(kernel, pb, points, perm[r], perm[c]),
            None => rbf::kernel_entry(kernel, points, perm[r], perm[c]),
        }
    };
    let mut builder = BlockBuilder {
        points,
        perm,
        entry: &entry,
        params,
        blocks: Vec::new(),
        densified: 0,
    };
    builder.partition(&tree.root, &tree.root)?;
    let BlockBuilder {
        blocks, densified, ..
    } = builder;

    let n = points.len();
    let mut stats = CompressionStats {
        n_points: n,
        densified_blocks: densified,
        dense_equivalent_bytes: n * n * 8,
        tree_depth: tree.root.depth(),
        leaf_threshold: params.leaf_threshold,
        eta: params.eta,
        aca_tol: params.aca_tol,
        ..Default::default()
    };
    let mut floats = 0usize;
    let mut rank_sum = 0usize;
    for b in &blocks {
        match &b.payload {
            BlockPayload::Dense(d) => {
                stats.dense_blocks += 1;
                floats += d.len();
            }
            BlockPayload::LowRank(lr) => {
                stats.lowrank_blocks += 1;
                stats.max_rank = stats.max_rank.max(lr.rank());
                rank_sum += lr.rank();
                floats += lr.floats();
            }
        }
    }
    stats.mean_rank = if stats.lowrank_blocks > 0 {
        rank_sum as f64 / stats.lowrank_blocks as f64
    } else {
        0.0
    };
    stats.bytes = floats * 8 + n * std::mem::size_of::<usize>();
    stats.build_seconds = start.elapsed().as_secs_f64();
    Ok(HOperator {
        shape: points.shape(),
        tree,
        blocks,
        params,
        stats,
    })
}

struct BlockBuilder<'a, F: Fn(usize, usize) -> f64> {
    points: &'a PointSet,
    perm: &'a [usize],
    entry: &'a F,
    params: HParams,
    blocks: Vec<HBlock>,
    densified: usize,
}

impl<F: Fn(usize, usize) -> f64> BlockBuilder<'_, F> {
    fn partition(&mut self, row: &ClusterNode, col: &ClusterNode) -> Result<()> {
        if admissible(row, col, self.params.eta) {
            return self.lowrank(row, col);
        }
        match (&row.children, &col.children) {
            (None, None) => {
                self.dense(row, col, false);
                Ok(())
            }
            (None, Some(cc)) => {
                self.partition(row, &cc[0])?;
                self.partition(row, &cc[1])
            }
            (Some(rc), None) => {
                self.partition(&rc[0], col)?;
                self.partition(&rc[1], col)
            }
            (Some(rc), Some(cc)) => {
                for r in rc.iter() {
                    for c in cc.iter() {
                        self.partition(r, c)?;
                    }
                }
                Ok(())
            }
        }
    }

    fn dense(&mut self, row: &ClusterNode, col: &ClusterNode, admissible: bool) {
        let mut d = Vec::with_capacity(row.len() * col.len());
        for r in row.start..row.end {
            for c in col.start..col.end {
                d.push((self.entry)(r, c));
            }
        }
        self.blocks.push(HBlock {
            rows: (row.start, row.end),
            cols: (col.start, col.end),
            admissible,
            payload: BlockPayload::Dense(d),
        });
    }

    fn lowrank(&mut self, row: &ClusterNode, col: &ClusterNode) -> Result<()> {
        let center = row.bbox.center();
        let pts = self.points.points();
        let first = (row.start..row.end)
            .map(|t| {
                let p = pts[self.perm[t]].pos;
                let d = (0..3).map(|a| (p[a] - center[a]).powi(2)).sum::<f64>();
                (t - row.start, d)
            })
            .fold(
                (0, f64::INFINITY),
                |acc, c| if c.1 < acc.1 { c } else { acc },
            )
            .0;
        let (r0, c0) = (row.start, col.start);
        let max_rank = row.len().min(col.len());
        let res = aca(
            |i, j| (self.entry)(r0 + i, c0 + j),
            row.len(),
            col.len(),
            self.params.aca_tol,
            max_rank,
            first,
        )?;
        // Factors that do not beat dense storage are not worth keeping.
        if !res.converged || res.block.floats() >= row.len() * col.len() {
            self.densified += 1;
            self.dense(row, col, true);
            return Ok(());
        }
        self.blocks.push(HBlock {
            rows: (row.start, row.end),
            cols: (col.start, col.end),
            admissible: true,
            payload: BlockPayload::LowRank(res.block),
        });
        Ok(())
    }
}

impl HOperator {
    pub fn shape(&self) -> Shape3 {
        self.shape
    }

    pub fn tree(&self) -> &ClusterTree {
        &self.tree
    }

    pub fn blocks(&self) -> &[HBlock] {
        &self.blocks
    }

    pub fn params(&self) -> HParams {
        self.params
    }

    pub fn stats(&self) -> &CompressionStats {
        &self.stats
    }

    fn check(&self, x: &Tensor3) -> Result<()> {
        if x.shape() != self.shape {
            return Err(Error::ShapeMismatch {
                expected: self.shape,
                found: x.shape(),
            });
        }
        Ok(())
    }

    /// `H *3 X` through the block structure.
    pub fn apply(&self, x: &Tensor3) -> Result<Tensor3> {
        self.check(x)?;
        let perm = &self.tree.perm;
        let xs = x.as_slice();
        let xp: Vec<f64> = perm.iter().map(|&i| xs[i]).collect();
        let mut yp = vec![0.0; xp.len()];
        for b in &self.blocks {
            let xb = &xp[b.cols.0..b.cols.1];
            let yb = &mut yp[b.rows.0..b.rows.1];
            match &b.payload {
                BlockPayload::Dense(d) => {
                    for (yi, row) in yb.iter_mut().zip(d.chunks_exact(b.n_cols())) {
                        *yi += dot(row, xb);
                    }
                }
                BlockPayload::LowRank(lr) => lr.apply_add(xb, yb),
            }
        }
        Ok(self.unpermute(yp))
    }

    /// `H^T *3 X` through the block structure.
    pub fn apply_transpose(&self, x: &Tensor3) -> Result<Tensor3> {
        self.check(x)?;
        let perm = &self.tree.perm;
        let xs = x.as_slice();
        let xp: Vec<f64> = perm.iter().map(|&i| xs[i]).collect();
        let mut yp = vec![0.0; xp.len()];
        for b in &self.blocks {
            let xb = &xp[b.rows.0..b.rows.1];
            let yb = &mut yp[b.cols.0..b.cols.1];
            match &b.payload {
                BlockPayload::Dense(d) => {
                    for (xi, row) in xb.iter().zip(d.chunks_exact(b.n_cols())) {
                        if *xi != 0.0 {
                            for (yj, a) in yb.iter_mut().zip(row) {
                                *yj += xi * a;
                            }
                        }
                    }
                }
                BlockPayload::LowRank(lr) => lr.apply_transpose_add(xb, yb),
            }
        }
        Ok(self.unpermute(yp))
    }

    fn unpermute(&self, yp: Vec<f64>) -> Tensor3 {
        let mut y = vec![0.0; yp.len()];
        for (t, &i) in self.tree.perm.iter().enumerate() {
            y[i] = yp[t];
        }
        Tensor3::from_vec(self.shape, y).expect("finite apply")
    }

    /// Dense flattening in tensor ordering; for audits on small instances.
    pub fn to_dense_flat(&self) -> Vec<f64> {
        let n = self.shape.total();
        let perm = &self.tree.perm;
        let mut flat = vec![0.0; n * n];
        for b in &self.blocks {
            let nc = b.n_cols();
            let vals = match &b.payload {
                BlockPayload::Dense(d) => d.clone(),
                BlockPayload::LowRank(lr) => lr.to_dense(),
            };
            for i in 0..b.n_rows() {
                for j in 0..nc {
                    flat[perm[b.rows.0 + i] * n + perm[b.cols.0 + j]] = vals[i * nc + j];
                }
            }
        }
        flat
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collocation::Point;

    fn line(n: usize) -> PointSet {
        let pts = (0..n)
            .map(|i| Point::interior([i as f64, 0.0, 0.0]))
            .collect();
        PointSet::new(Shape3::new(n, 1, 1).unwrap(), pts).unwrap()
    }

    #[test]
    fn collinear_points_split_into_pairs() {
        let tree = build_cluster_tree(&line(8), 2).unwrap();
        assert_eq!(tree.root.depth(), 2);
        let leaves = tree.root.leaves();
        assert_eq!(leaves.len(), 4);
        assert!(leaves.iter().all(|l| l.len() == 2));
    }

    #[test]
    fn large_threshold_gives_single_leaf() {
        let tree = build_cluster_tree(&line(8), 8).unwrap();
        assert!(tree.root.is_leaf());
        assert!(build_cluster_tree(&line(8), 0).is_err());
    }

    #[test]
    fn admissibility_examples() {
        let unit = BoundingBox::new([0.0; 3], [1.0; 3]);
        let far = BoundingBox::new([11.0, 0.0, 0.0], [12.0, 1.0, 1.0]);
        assert_eq!(unit.distance(&far), 10.0);
        assert!(boxes_admissible(&unit, &far, 2.0));
        assert!(!boxes_admissible(&unit, &unit, 2.0));
        let point = BoundingBox::new([0.5; 3], [0.5; 3]);
        assert!(!boxes_admissible(&point, &point, 2.0));
    }

    #[test]
    fn aca_rank_one_and_zero() {
        let f = |i: usize| 1.0 + i as f64;
        let g = |j: usize| (j as f64 * 0.3).sin() + 2.0;
        let res = aca(|i, j| f(i) * g(j), 12, 9, 1e-10, 9, 0).unwrap();
        assert!(res.converged);
        assert_eq!(res.block.rank(), 1);
        for i in 0..12 {
            for j in 0..9 {
                assert!((res.block.entry(i, j) - f(i) * g(j)).abs() < 1e-12);
            }
        }
        let zero = aca(|_, _| 0.0, 5, 7, 1e-6, 5, 2).unwrap();
        assert!(zero.converged);
        assert_eq!(zero.block.rank(), 0);
    }

    #[test]
    fn aca_hits_rank_cap_on_full_rank_block() {
        let res = aca(|i, j| if i == j { 1.0 } else { 0.0 }, 6, 6, 1e-12, 3, 0).unwrap();
        assert!(!res.converged);
        assert_eq!(res.block.rank(), 3);
    }

    #[test]
    fn default_leaf_threshold() {
        let s = Shape3::cube(10).unwrap();
        // 5 · (3 ln 10)^{3/2} = 90.6...
        assert_eq!(HParams::leaf_threshold_for(s, 5.0), 91);
        assert_eq!(
            HParams::leaf_threshold_for(Shape3::cube(1).unwrap(), 5.0),
            1
        );
    }
}
