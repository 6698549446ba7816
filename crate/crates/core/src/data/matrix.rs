//! Sparse rating storage with both user-major and item-major traversal.

use std::collections::HashMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;

/// Closed interval of admissible rating values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct RatingBounds<F: Scalar> {
    pub min: F,
    pub max: F,
}

impl<F: Scalar> RatingBounds<F> {
    pub fn new(min: F, max: F) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && min < max) {
            return invalid(format!("rating bounds must satisfy min < max, got [{min}, {max}]"));
        }
        Ok(Self { min, max })
    }

    #[inline]
    pub fn contains(&self, r: F) -> bool {
        r.is_finite() && r >= self.min && r <= self.max
    }

    #[inline]
    pub fn clamp(&self, r: F) -> F {
        r.max(self.min).min(self.max)
    }

    pub fn midpoint(&self) -> F {
        (self.min + self.max) / F::lit(2.0)
    }
}

impl<F: Scalar> Default for RatingBounds<F> {
    fn default() -> Self {
        Self { min: F::one(), max: F::lit(5.0) }
    }
}

/// One observed rating, addressed by dense indices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct RatingTriple<F: Scalar> {
    pub user: usize,
    pub item: usize,
    pub rating: F,
}

/// Bijection between external string ids and dense indices `0..len`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IdMap {
    ids: Vec<String>,
    index: HashMap<String, usize>,
}

impl IdMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Synthetic ids `prefix0, prefix1, ...`.
    pub fn numbered(prefix: &str, n: usize) -> Self {
        Self::from_ids((0..n).map(|i| format!("{prefix}{i}"))).expect("numbered ids are unique")
    }

    pub fn from_ids<I: IntoIterator<Item = String>>(ids: I) -> Result<Self> {
        let mut map = Self::new();
        for id in ids {
            if map.index.contains_key(&id) {
                return invalid(format!("duplicate id `{id}`"));
            }
            map.insert(id);
        }
        Ok(map)
    }

    /// Returns the index of `id`, assigning the next free one on first sight.
    pub fn get_or_insert(&mut self, id: &str) -> usize {
        if let Some(&i) = self.index.get(id) {
            return i;
        }
        self.insert(id.to_string())
    }

    fn insert(&mut self, id: String) -> usize {
        let i = self.ids.len();
        self.index.insert(id.clone(), i);
        self.ids.push(id);
        i
    }

    pub fn get(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn id(&self, index: usize) -> &str {
        &self.ids[index]
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

impl Serialize for IdMap {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.ids.serialize(s)
    }
}

impl<'de> Deserialize<'de> for IdMap {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let ids = Vec::<String>::deserialize(d)?;
        IdMap::from_ids(ids).map_err(serde::de::Error::custom)
    }
}

/// Sparse `n_users × n_items` rating matrix.
///
/// Entries live once in user-major (CSR) order, sorted by item within each
/// row. The item-major view stores, per column, the user and the CSR
/// position of each entry, so per-entry tables indexed by CSR position (the
/// EM posteriors) can be read in either order.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingsMatrix<F: Scalar> {
    bounds: RatingBounds<F>,
    user_ids: IdMap,
    item_ids: IdMap,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<F>,
    row_of: Vec<usize>,
    col_ptr: Vec<usize>,
    csc_rows: Vec<usize>,
    csc_pos: Vec<usize>,
}

impl<F: Scalar> RatingsMatrix<F> {
    /// Builds a matrix from dense-index triples. Ids default to `u0..`/`i0..`
    /// when the maps are empty.
    pub fn from_triples(n_users: usize, n_items: usize, triples: Vec<RatingTriple<F>>, bounds: RatingBounds<F>) -> Result<Self> {
        Self::with_ids(IdMap::numbered("u", n_users), IdMap::numbered("i", n_items), triples, bounds)
    }

    pub fn with_ids(user_ids: IdMap, item_ids: IdMap, mut triples: Vec<RatingTriple<F>>, bounds: RatingBounds<F>) -> Result<Self> {
        let n_users = user_ids.len();
        let n_items = item_ids.len();
        for t in &triples {
            if t.user >= n_users || t.item >= n_items {
                return Err(Error::IndexOutOfRange(format!("entry ({}, {}) outside {n_users}×{n_items}", t.user, t.item)));
            }
            if !bounds.contains(t.rating) {
                return Err(Error::OutOfRange {
                    line: 0,
                    rating: t.rating.to_f64_lossy(),
                    min: bounds.min.to_f64_lossy(),
                    max: bounds.max.to_f64_lossy(),
                });
            }
        }
        triples.sort_by_key(|t| (t.user, t.item));
        if let Some(w) = triples.windows(2).find(|w| w[0].user == w[1].user && w[0].item == w[1].item) {
            return Err(Error::DuplicateEntry {
                line: 0,
                user: user_ids.id(w[0].user).to_string(),
                item: item_ids.id(w[0].item).to_string(),
            });
        }

        let nnz = triples.len();
        let mut row_ptr = vec![0usize; n_users + 1];
        let mut col_counts = vec![0usize; n_items + 1];
        for t in &triples {
            row_ptr[t.user + 1] += 1;
            col_counts[t.item + 1] += 1;
        }
        for u in 0..n_users {
            row_ptr[u + 1] += row_ptr[u];
        }
        for i in 0..n_items {
            col_counts[i + 1] += col_counts[i];
        }
        let col_ptr = col_counts;
        let mut col_idx = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        let mut row_of = Vec::with_capacity(nnz);
        let mut csc_rows = vec![0usize; nnz];
        let mut csc_pos = vec![0usize; nnz];
        let mut fill = col_ptr.clone();
        for (pos, t) in triples.iter().enumerate() {
            col_idx.push(t.item);
            values.push(t.rating);
            row_of.push(t.user);
            let slot = fill[t.item];
            csc_rows[slot] = t.user;
            csc_pos[slot] = pos;
            fill[t.item] += 1;
        }
        Ok(Self { bounds, user_ids, item_ids, row_ptr, col_idx, values, row_of, col_ptr, csc_rows, csc_pos })
    }

    pub fn empty(bounds: RatingBounds<F>) -> Self {
        Self::with_ids(IdMap::new(), IdMap::new(), Vec::new(), bounds).expect("empty matrix is valid")
    }

    pub fn n_users(&self) -> usize {
        self.user_ids.len()
    }

    pub fn n_items(&self) -> usize {
        self.item_ids.len()
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn bounds(&self) -> RatingBounds<F> {
        self.bounds
    }

    pub fn user_ids(&self) -> &IdMap {
        &self.user_ids
    }

    pub fn item_ids(&self) -> &IdMap {
        &self.item_ids
    }

    /// Fraction of observed cells.
    pub fn density(&self) -> f64 {
        let cells = self.n_users() as f64 * self.n_items() as f64;
        if cells == 0.0 {
            0.0
        } else {
            self.nnz() as f64 / cells
        }
    }

    /// CSR positions of user `u`'s entries.
    #[inline]
    pub fn row_range(&self, u: usize) -> std::ops::Range<usize> {
        self.row_ptr[u]..self.row_ptr[u + 1]
    }

    #[inline]
    pub fn user_nnz(&self, u: usize) -> usize {
        self.row_ptr[u + 1] - self.row_ptr[u]
    }

    #[inline]
    pub fn item_nnz(&self, i: usize) -> usize {
        self.col_ptr[i + 1] - self.col_ptr[i]
    }

    /// `(item, rating)` pairs of user `u`, sorted by item.
    pub fn user_row(&self, u: usize) -> impl Iterator<Item = (usize, F)> + '_ {
        let r = self.row_range(u);
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    /// `(user, rating, csr_position)` triples of item `i`, sorted by user.
    pub fn item_col(&self, i: usize) -> impl Iterator<Item = (usize, F, usize)> + '_ {
        let r = self.col_ptr[i]..self.col_ptr[i + 1];
        self.csc_rows[r.clone()].iter().zip(&self.csc_pos[r]).map(move |(&u, &p)| (u, self.values[p], p))
    }

    /// Entry at a CSR position.
    #[inline]
    pub fn entry(&self, pos: usize) -> RatingTriple<F> {
        RatingTriple { user: self.row_of[pos], item: self.col_idx[pos], rating: self.values[pos] }
    }

    #[inline]
    pub fn user_at(&self, pos: usize) -> usize {
        self.row_of[pos]
    }

    #[inline]
    pub fn item_at(&self, pos: usize) -> usize {
        self.col_idx[pos]
    }

    pub fn values(&self) -> &[F] {
        &self.values
    }

    /// All entries in user-major order.
    pub fn triples(&self) -> impl Iterator<Item = RatingTriple<F>> + '_ {
        (0..self.nnz()).map(move |p| self.entry(p))
    }

    /// All entries in item-major order.
    pub fn triples_by_item(&self) -> impl Iterator<Item = RatingTriple<F>> + '_ {
        (0..self.n_items()).flat_map(move |i| self.item_col(i).map(move |(u, r, _)| RatingTriple { user: u, item: i, rating: r }))
    }

    pub fn get(&self, u: usize, i: usize) -> Option<F> {
        let r = self.row_range(u);
        self.col_idx[r.clone()].binary_search(&i).ok().map(|k| self.values[r.start + k])
    }

    /// Mean of all ratings, or the bounds midpoint when empty.
    pub fn global_mean(&self) -> F {
        if self.values.is_empty() {
            self.bounds.midpoint()
        } else {
            crate::scalar::compensated_sum(self.values.iter().copied()) / F::from_usize(self.nnz()).unwrap()
        }
    }

    /// Keeps the entries whose CSR position satisfies `keep`; dimensions and
    /// ids are unchanged.
    pub fn filter_positions(&self, mut keep: impl FnMut(usize) -> bool) -> Self {
        let triples = (0..self.nnz()).filter(|&p| keep(p)).map(|p| self.entry(p)).collect();
        Self::with_ids(self.user_ids.clone(), self.item_ids.clone(), triples, self.bounds).expect("subset of a valid matrix is valid")
    }

    /// Re-expresses the matrix in new user/item id spaces. `user_map[u]` is
    /// the new index of old user `u`.
    pub(crate) fn reindex(&self, user_ids: IdMap, user_map: &[usize], item_ids: IdMap, item_map: &[usize]) -> Self {
        let triples = self.triples().map(|t| RatingTriple { user: user_map[t.user], item: item_map[t.item], rating: t.rating }).collect();
        Self::with_ids(user_ids, item_ids, triples, self.bounds).expect("reindexing preserves validity")
    }

    /// Same matrix under different rating bounds.
    pub fn with_bounds(&self, bounds: RatingBounds<F>) -> Result<Self> {
        Self::with_ids(self.user_ids.clone(), self.item_ids.clone(), self.triples().collect(), bounds)
    }
}

/// Swaps the roles of users and items: `(u, i, r)` becomes `(i, u, r)`.
pub fn transpose<F: Scalar>(m: &RatingsMatrix<F>) -> RatingsMatrix<F> {
    let triples = m.triples().map(|t| RatingTriple { user: t.item, item: t.user, rating: t.rating }).collect();
    RatingsMatrix::with_ids(m.item_ids.clone(), m.user_ids.clone(), triples, m.bounds).expect("transpose preserves validity")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(user: usize, item: usize, rating: f64) -> RatingTriple<f64> {
        RatingTriple { user, item, rating }
    }

    fn sample() -> RatingsMatrix<f64> {
        RatingsMatrix::from_triples(2, 3, vec![t(1, 2, 4.0), t(0, 0, 1.0), t(0, 2, 3.5), t(1, 1, 2.0)], RatingBounds::default()).unwrap()
    }

    #[test]
    fn both_orders_enumerate_same_entries() {
        let m = sample();
        let mut a: Vec<_> = m.triples().map(|t| (t.user, t.item, t.rating.to_bits())).collect();
        let mut b: Vec<_> = m.triples_by_item().map(|t| (t.user, t.item, t.rating.to_bits())).collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
        assert_eq!(m.item_nnz(2), 2);
        assert_eq!(m.item_nnz(0), 1);
        assert_eq!(m.get(1, 2), Some(4.0));
        assert_eq!(m.get(1, 0), None);
    }

    #[test]
    fn rejects_duplicates_and_out_of_range() {
        let dup = RatingsMatrix::from_triples(1, 1, vec![t(0, 0, 1.0), t(0, 0, 2.0)], RatingBounds::default());
        assert!(matches!(dup, Err(Error::DuplicateEntry { .. })));
        let oor = RatingsMatrix::from_triples(1, 1, vec![t(0, 0, 6.0)], RatingBounds::default());
        assert!(matches!(oor, Err(Error::OutOfRange { .. })));
        let nan = RatingsMatrix::from_triples(1, 1, vec![t(0, 0, f64::NAN)], RatingBounds::default());
        assert!(nan.is_err());
    }

    #[test]
    fn transpose_swaps_shape() {
        let m = sample();
        let tr = transpose(&m);
        assert_eq!((tr.n_users(), tr.n_items(), tr.nnz()), (3, 2, 4));
        assert_eq!(tr.get(2, 1), Some(4.0));
        assert_eq!(transpose(&tr), m);
        let e = RatingsMatrix::<f64>::empty(RatingBounds::default());
        assert_eq!(transpose(&e).nnz(), 0);
    }

    #[test]
    fn item_nnz_matches_scan() {
        let m = sample();
        for i in 0..m.n_items() {
            assert_eq!(m.item_nnz(i), m.triples().filter(|t| t.item == i).count());
        }
    }
}
