//! Feature encoding: turning transactions into dense design matrices.
//!
//! Linear models get a one-hot expansion of the district id; tree models
//! get the raw integer code; the proximity forest gets the tree encoding
//! with the coordinate columns removed.

use serde::{Deserialize, Serialize};

use crate::dataset::Transaction;
use crate::error::{Error, Result};

/// Dense row-major matrix of model inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignMatrix {
    n_rows: usize,
    n_cols: usize,
    data: Vec<f64>,
}

impl DesignMatrix {
    /// Build from row-major data; every value must be finite.
    pub fn from_vec(data: Vec<f64>, n_rows: usize, n_cols: usize) -> Result<Self> {
        if data.len() != n_rows * n_cols {
            return Err(Error::DimensionMismatch {
                expected: n_rows * n_cols,
                got: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        Ok(Self { n_rows, n_cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::DimensionMismatch {
                expected: n_cols,
                got: rows.iter().map(|r| r.len()).find(|&l| l != n_cols).unwrap_or(0),
            });
        }
        Self::from_vec(rows.concat(), n_rows, n_cols)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n_cols + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    /// A new matrix holding only the listed rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.n_cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Self {
            n_rows: indices.len(),
            n_cols: self.n_cols,
            data,
        }
    }
}

/// Which encoding a design matrix uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Encoding {
    /// District expanded to indicator columns.
    Linear,
    /// District as a single integer code.
    Tree,
    /// Tree encoding without longitude/latitude.
    Proximity,
}

/// Deterministic feature encoder; fixes the district vocabulary so column
/// counts agree across splits.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureEncoder {
    districts: Vec<u32>,
}

impl FeatureEncoder {
    /// Collect the sorted district vocabulary from the full dataset.
    pub fn fit(transactions: &[Transaction]) -> Self {
        let mut districts: Vec<u32> = transactions.iter().map(|t| t.dwelling.district).collect();
        districts.sort_unstable();
        districts.dedup();
        Self { districts }
    }

    pub fn districts(&self) -> &[u32] {
        &self.districts
    }

    pub fn n_cols(&self, encoding: Encoding) -> usize {
        match encoding {
            Encoding::Linear => 15 + self.districts.len(),
            Encoding::Tree => 16,
            Encoding::Proximity => 14,
        }
    }

    pub fn encode_row(&self, t: &Transaction, encoding: Encoding) -> Vec<f64> {
        let d = &t.dwelling;
        let mut row = Vec::with_capacity(self.n_cols(encoding));
        row.push(d.size);
        row.push(d.gross_size);
        if encoding != Encoding::Proximity {
            row.push(d.longitude);
            row.push(d.latitude);
        }
        match encoding {
            Encoding::Linear => {
                for &id in &self.districts {
                    row.push(if d.district == id { 1.0 } else { 0.0 });
                }
            }
            _ => row.push(d.district as f64),
        }
        row.push(d.altitude);
        row.push(d.bedrooms as f64);
        row.push(d.floor as f64);
        row.push(d.age);
        row.push(d.coast_distance);
        row.push(d.lake_distance);
        row.push(d.balcony as f64);
        row.push(d.elevator as f64);
        row.push(d.units_on_address as f64);
        row.push(d.homes_nearby as f64);
        row.push(d.other_buildings_nearby as f64);
        row
    }

    pub fn encode(&self, transactions: &[Transaction], encoding: Encoding) -> Result<DesignMatrix> {
        let n_cols = self.n_cols(encoding);
        let mut data = Vec::with_capacity(transactions.len() * n_cols);
        for t in transactions {
            data.extend(self.encode_row(t, encoding));
        }
        DesignMatrix::from_vec(data, transactions.len(), n_cols)
    }
}

/// All per-split model inputs bundled together: the response, the three
/// design encodings, planar locations, and district labels.
#[derive(Debug, Clone)]
pub struct DataPanel {
    pub y: Vec<f64>,
    pub linear_x: DesignMatrix,
    pub tree_x: DesignMatrix,
    pub proximity_x: DesignMatrix,
    pub locations: Vec<(f64, f64)>,
    pub districts: Vec<u32>,
}

impl DataPanel {
    pub fn build(transactions: &[Transaction], encoder: &FeatureEncoder) -> Result<Self> {
        Ok(Self {
            y: transactions.iter().map(|t| t.sale_price).collect(),
            linear_x: encoder.encode(transactions, Encoding::Linear)?,
            tree_x: encoder.encode(transactions, Encoding::Tree)?,
            proximity_x: encoder.encode(transactions, Encoding::Proximity)?,
            locations: transactions.iter().map(|t| t.location_km).collect(),
            districts: transactions.iter().map(|t| t.dwelling.district).collect(),
        })
    }

    /// Panel restricted to the given transaction indices.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            y: indices.iter().map(|&i| self.y[i]).collect(),
            linear_x: self.linear_x.select_rows(indices),
            tree_x: self.tree_x.select_rows(indices),
            proximity_x: self.proximity_x.select_rows(indices),
            locations: indices.iter().map(|&i| self.locations[i]).collect(),
            districts: indices.iter().map(|&i| self.districts[i]).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Dwelling;

    fn transaction(district: u32, size: f64) -> Transaction {
        Transaction {
            dwelling: Dwelling {
                size,
                gross_size: size + 2.0,
                longitude: 10.7,
                latitude: 59.9,
                district,
                altitude: 50.0,
                bedrooms: 2,
                floor: 3,
                age: 40.0,
                coast_distance: 1000.0,
                lake_distance: 500.0,
                balcony: 1,
                elevator: 0,
                units_on_address: 4,
                homes_nearby: 100,
                other_buildings_nearby: 90,
            },
            sale_price: 4.0,
            location_km: (0.1, -0.2),
        }
    }

    #[test]
    fn encodings_have_expected_widths() {
        let txs = vec![transaction(3, 60.0), transaction(7, 80.0), transaction(3, 55.0)];
        let enc = FeatureEncoder::fit(&txs);
        assert_eq!(enc.districts(), &[3, 7]);
        assert_eq!(enc.encode(&txs, Encoding::Linear).unwrap().n_cols(), 17);
        assert_eq!(enc.encode(&txs, Encoding::Tree).unwrap().n_cols(), 16);
        assert_eq!(enc.encode(&txs, Encoding::Proximity).unwrap().n_cols(), 14);
    }

    #[test]
    fn one_hot_marks_the_right_district() {
        let txs = vec![transaction(3, 60.0), transaction(7, 80.0)];
        let enc = FeatureEncoder::fit(&txs);
        let x = enc.encode(&txs, Encoding::Linear).unwrap();
        // Columns: size, gross, lon, lat, district-3, district-7, ...
        assert_eq!(x.get(0, 4), 1.0);
        assert_eq!(x.get(0, 5), 0.0);
        assert_eq!(x.get(1, 4), 0.0);
        assert_eq!(x.get(1, 5), 1.0);
    }

    #[test]
    fn proximity_encoding_drops_coordinates() {
        let txs = vec![transaction(3, 60.0)];
        let enc = FeatureEncoder::fit(&txs);
        let x = enc.encode(&txs, Encoding::Proximity).unwrap();
        assert!(x.row(0).iter().all(|&v| (v - 10.7).abs() > 1e-9 && (v - 59.9).abs() > 1e-9));
    }

    #[test]
    fn non_finite_values_rejected() {
        assert!(matches!(
            DesignMatrix::from_vec(vec![1.0, f64::NAN], 1, 2),
            Err(Error::NonFiniteInput)
        ));
    }

    #[test]
    fn select_rows_preserves_order() {
        let m = DesignMatrix::from_vec(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0], 3, 2).unwrap();
        let s = m.select_rows(&[2, 0]);
        assert_eq!(s.row(0), &[5.0, 6.0]);
        assert_eq!(s.row(1), &[1.0, 2.0]);
    }
}
