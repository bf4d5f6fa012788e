//! Housing-transaction data model: CSV ingestion, planar projection of
//! coordinates, and reproducible three-way splits.

use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Kilometers per degree of latitude (mean Earth radius times pi/180).
pub const KM_PER_DEGREE: f64 = 111.195;

/// Expected CSV header columns, in canonical write order.
pub const CSV_COLUMNS: [&str; 17] = [
    "sale_price",
    "size",
    "gross_size",
    "longitude",
    "latitude",
    "city_district",
    "altitude",
    "bedrooms",
    "floor",
    "age",
    "coast_distance",
    "lake_distance",
    "balcony",
    "elevator",
    "units_on_address",
    "homes_nearby",
    "other_buildings_nearby",
];

/// One dwelling's covariates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dwelling {
    /// Livable area in square meters.
    pub size: f64,
    /// Usable area in square meters (independent of `size`).
    pub gross_size: f64,
    pub longitude: f64,
    pub latitude: f64,
    /// Categorical city-district id.
    pub district: u32,
    /// Meters above sea level.
    pub altitude: f64,
    pub bedrooms: u32,
    /// Lowest floor of the dwelling; may be negative.
    pub floor: i32,
    /// Age in years at the time of sale.
    pub age: f64,
    /// Distance to the coast in meters.
    pub coast_distance: f64,
    /// Distance to the nearest lake in meters.
    pub lake_distance: f64,
    /// 1 if the dwelling has a balcony, else 0.
    pub balcony: u8,
    /// 1 if the building has an elevator, else 0.
    pub elevator: u8,
    pub units_on_address: u32,
    pub homes_nearby: u32,
    pub other_buildings_nearby: u32,
}

/// One sale: a dwelling, its price, and its projected planar location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transaction {
    pub dwelling: Dwelling,
    /// Sale price in millions.
    pub sale_price: f64,
    /// Planar (x, y) coordinates in kilometers, projected at load time.
    pub location_km: (f64, f64),
}

/// A disjoint partition of `0..n` into train / calibration / test index lists.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub calibration: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
}

/// Equirectangular projection of (longitude, latitude) onto kilometers,
/// anchored at `reference` = (lon0, lat0).
pub fn project_to_km(longitude: f64, latitude: f64, reference: (f64, f64)) -> (f64, f64) {
    let (lon0, lat0) = reference;
    let x = KM_PER_DEGREE * lat0.to_radians().cos() * (longitude - lon0);
    let y = KM_PER_DEGREE * (latitude - lat0);
    (x, y)
}

/// Euclidean distance between two planar points in kilometers.
pub fn distance_km(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

/// Mean (longitude, latitude) of a set of dwellings; the default projection
/// reference.
pub fn centroid(dwellings: &[Dwelling]) -> (f64, f64) {
    let n = dwellings.len().max(1) as f64;
    let lon = dwellings.iter().map(|d| d.longitude).sum::<f64>() / n;
    let lat = dwellings.iter().map(|d| d.latitude).sum::<f64>() / n;
    (lon, lat)
}

/// Attach projected planar coordinates to dwellings and prices, projecting
/// at the dwelling centroid.
pub fn assemble_transactions(dwellings: Vec<Dwelling>, prices: Vec<f64>) -> Vec<Transaction> {
    let reference = centroid(&dwellings);
    dwellings
        .into_iter()
        .zip(prices)
        .map(|(dwelling, sale_price)| {
            let location_km = project_to_km(dwelling.longitude, dwelling.latitude, reference);
            Transaction {
                dwelling,
                sale_price,
                location_km,
            }
        })
        .collect()
}

/// Load transactions from a CSV file. Columns are bound by header name, so
/// column order is free; all 17 schema columns must be present.
pub fn load_transactions<P: AsRef<Path>>(path: P) -> Result<Vec<Transaction>> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let mut index_of = Vec::with_capacity(CSV_COLUMNS.len());
    for name in CSV_COLUMNS {
        let idx = headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))?;
        index_of.push(idx);
    }

    let mut dwellings = Vec::new();
    let mut prices = Vec::new();
    for (row_number, record) in reader.records().enumerate() {
        let record = record?;
        let field = |col: usize| record.get(index_of[col]).unwrap_or("").trim();
        let parse_err = |col: usize| Error::ParseError {
            row: row_number,
            column: CSV_COLUMNS[col].to_string(),
        };
        let float = |col: usize| field(col).parse::<f64>().map_err(|_| parse_err(col));
        let uint = |col: usize| field(col).parse::<u32>().map_err(|_| parse_err(col));
        // Missing balcony/elevator values read as 0.
        let flag = |col: usize| -> Result<u8> {
            match field(col) {
                "" => Ok(0),
                "0" => Ok(0),
                "1" => Ok(1),
                _ => Err(parse_err(col)),
            }
        };

        let sale_price = float(0)?;
        let size = float(1)?;
        let gross_size = float(2)?;
        if sale_price <= 0.0 {
            return Err(parse_err(0));
        }
        if size <= 0.0 {
            return Err(parse_err(1));
        }
        if gross_size <= 0.0 {
            return Err(parse_err(2));
        }

        dwellings.push(Dwelling {
            size,
            gross_size,
            longitude: float(3)?,
            latitude: float(4)?,
            district: uint(5)?,
            altitude: float(6)?,
            bedrooms: uint(7)?,
            floor: field(8).parse::<i32>().map_err(|_| parse_err(8))?,
            age: float(9)?,
            coast_distance: float(10)?,
            lake_distance: float(11)?,
            balcony: flag(12)?,
            elevator: flag(13)?,
            units_on_address: uint(14)?,
            homes_nearby: uint(15)?,
            other_buildings_nearby: uint(16)?,
        });
        prices.push(sale_price);
    }

    if dwellings.is_empty() {
        return Err(Error::EmptyFile);
    }
    Ok(assemble_transactions(dwellings, prices))
}

/// Write transactions in the CSV schema. Numeric fields round-trip exactly
/// through `load_transactions`.
pub fn save_transactions<P: AsRef<Path>>(path: P, transactions: &[Transaction]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut out = std::io::BufWriter::new(file);
    writeln!(out, "{}", CSV_COLUMNS.join(","))?;
    for t in transactions {
        let d = &t.dwelling;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            t.sale_price,
            d.size,
            d.gross_size,
            d.longitude,
            d.latitude,
            d.district,
            d.altitude,
            d.bedrooms,
            d.floor,
            d.age,
            d.coast_distance,
            d.lake_distance,
            d.balcony,
            d.elevator,
            d.units_on_address,
            d.homes_nearby,
            d.other_buildings_nearby,
        )?;
    }
    out.flush()?;
    Ok(())
}

/// Partition `0..n_total` uniformly at random into three index lists with the
/// given size fractions. Deterministic for a fixed seed.
pub fn three_way_split(n_total: usize, fractions: (f64, f64, f64), seed: u64) -> Result<SplitIndices> {
    let (f1, f2, f3) = fractions;
    if !(f1 > 0.0 && f2 > 0.0 && f3 > 0.0) || (f1 + f2 + f3 - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidFractions);
    }

    let sizes = apportion(n_total, &[f1, f2, f3]);
    let mut order: Vec<usize> = (0..n_total).collect();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let mut train: Vec<usize> = order[..sizes[0]].to_vec();
    let mut calibration: Vec<usize> = order[sizes[0]..sizes[0] + sizes[1]].to_vec();
    let mut test: Vec<usize> = order[sizes[0] + sizes[1]..].to_vec();
    train.sort_unstable();
    calibration.sort_unstable();
    test.sort_unstable();

    Ok(SplitIndices {
        train,
        calibration,
        test,
        seed,
    })
}

/// Largest-remainder apportionment of `n` items to the given fractions;
/// ties go to the lowest index.
fn apportion(n: usize, fractions: &[f64]) -> Vec<usize> {
    let mut sizes: Vec<usize> = fractions.iter().map(|f| (f * n as f64).floor() as usize).collect();
    let assigned: usize = sizes.iter().sum();
    let mut remainders: Vec<(usize, f64)> = fractions
        .iter()
        .enumerate()
        .map(|(i, f)| (i, f * n as f64 - sizes[i] as f64))
        .collect();
    remainders.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    for k in 0..n - assigned {
        sizes[remainders[k % fractions.len()].0] += 1;
    }
    sizes
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    fn sample_csv() -> String {
        let mut s = String::from(CSV_COLUMNS.join(","));
        s.push('\n');
        s.push_str("4.28,65,67,10.78,59.92,3,94,2,3,58,3261,993,1,0,20,2721,2721\n");
        s.push_str("3.10,48,50,10.70,59.90,7,60,1,1,30,2000,800,0,1,10,1500,1400\n");
        s
    }

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn parses_rows_in_order() {
        let f = write_temp(&sample_csv());
        let txs = load_transactions(f.path()).unwrap();
        assert_eq!(txs.len(), 2);
        assert_eq!(txs[0].dwelling.size, 65.0);
        assert_eq!(txs[0].sale_price, 4.28);
        assert_eq!(txs[0].dwelling.district, 3);
        assert_eq!(txs[1].dwelling.elevator, 1);
    }

    #[test]
    fn column_order_is_free() {
        let mut cols: Vec<&str> = CSV_COLUMNS.to_vec();
        cols.reverse();
        let mut s = cols.join(",");
        s.push('\n');
        s.push_str("2721,2721,20,0,1,993,3261,58,3,2,94,3,59.92,10.78,67,65,4.28\n");
        let f = write_temp(&s);
        let txs = load_transactions(f.path()).unwrap();
        assert_eq!(txs[0].sale_price, 4.28);
        assert_eq!(txs[0].dwelling.size, 65.0);
    }

    #[test]
    fn missing_column_is_reported() {
        let s = sample_csv().replace("gross_size", "gross");
        let f = write_temp(&s);
        match load_transactions(f.path()) {
            Err(Error::MissingColumn(name)) => assert_eq!(name, "gross_size"),
            other => panic!("expected MissingColumn, got {other:?}"),
        }
    }

    #[test]
    fn malformed_field_is_reported_with_row_and_column() {
        let s = sample_csv().replace("4.28,65", "4.28,abc");
        let f = write_temp(&s);
        match load_transactions(f.path()) {
            Err(Error::ParseError { row, column }) => {
                assert_eq!(row, 0);
                assert_eq!(column, "size");
            }
            other => panic!("expected ParseError, got {other:?}"),
        }
    }

    #[test]
    fn empty_file_is_an_error() {
        let mut s = CSV_COLUMNS.join(",");
        s.push('\n');
        let f = write_temp(&s);
        assert!(matches!(load_transactions(f.path()), Err(Error::EmptyFile)));
    }

    #[test]
    fn missing_balcony_parses_as_zero() {
        let mut s = String::from(CSV_COLUMNS.join(","));
        s.push('\n');
        s.push_str("4.28,65,67,10.78,59.92,3,94,2,3,58,3261,993,,,20,2721,2721\n");
        let f = write_temp(&s);
        let txs = load_transactions(f.path()).unwrap();
        assert_eq!(txs[0].dwelling.balcony, 0);
        assert_eq!(txs[0].dwelling.elevator, 0);
    }

    #[test]
    fn save_then_load_round_trips_exactly() {
        let f = write_temp(&sample_csv());
        let txs = load_transactions(f.path()).unwrap();
        let out = tempfile::NamedTempFile::new().unwrap();
        save_transactions(out.path(), &txs).unwrap();
        let again = load_transactions(out.path()).unwrap();
        assert_eq!(txs, again);
    }

    #[test]
    fn reference_point_maps_to_origin() {
        let (x, y) = project_to_km(10.78, 59.92, (10.78, 59.92));
        assert_eq!(x, 0.0);
        assert_eq!(y, 0.0);
    }

    #[test]
    fn one_degree_of_latitude() {
        let (_, y) = project_to_km(10.78, 60.92, (10.78, 59.92));
        assert!((y - KM_PER_DEGREE).abs() < 1e-12);
    }

    #[test]
    fn projection_close_to_haversine_on_city_extent() {
        // Haversine oracle with the same mean Earth radius.
        fn haversine(lon1: f64, lat1: f64, lon2: f64, lat2: f64) -> f64 {
            let r = 6371.0088;
            let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
            let dp = p2 - p1;
            let dl = (lon2 - lon1).to_radians();
            let a = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
            2.0 * r * a.sqrt().asin()
        }

        let reference = (10.785, 59.9);
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        use rand::Rng;
        for _ in 0..200 {
            let lon_a = rng.random_range(10.62..10.95);
            let lat_a = rng.random_range(59.82..59.98);
            let lon_b = rng.random_range(10.62..10.95);
            let lat_b = rng.random_range(59.82..59.98);
            let a = project_to_km(lon_a, lat_a, reference);
            let b = project_to_km(lon_b, lat_b, reference);
            let planar = distance_km(a, b);
            let exact = haversine(lon_a, lat_a, lon_b, lat_b);
            if exact > 0.1 {
                assert!(
                    (planar - exact).abs() / exact < 0.005,
                    "planar {planar} vs haversine {exact}"
                );
            }
        }
    }

    #[test]
    fn distance_basics() {
        assert_eq!(distance_km((1.0, 2.0), (1.0, 2.0)), 0.0);
        assert_eq!(distance_km((0.0, 0.0), (3.0, 4.0)), 5.0);
    }

    #[test]
    fn distance_triangle_inequality() {
        use rand::Rng;
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        fn point(rng: &mut ChaCha12Rng) -> (f64, f64) {
            (rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0))
        }
        for _ in 0..1000 {
            let (a, b, c) = (point(&mut rng), point(&mut rng), point(&mut rng));
            assert!(distance_km(a, c) <= distance_km(a, b) + distance_km(b, c) + 1e-12);
        }
    }

    #[test]
    fn split_sizes_for_equal_thirds() {
        let s = three_way_split(6000, (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0), 42).unwrap();
        assert_eq!(s.train.len(), 2000);
        assert_eq!(s.calibration.len(), 2000);
        assert_eq!(s.test.len(), 2000);

        let tiny = three_way_split(3, (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0), 42).unwrap();
        assert_eq!(
            (tiny.train.len(), tiny.calibration.len(), tiny.test.len()),
            (1, 1, 1)
        );
    }

    #[test]
    fn split_is_deterministic_and_partitions() {
        let a = three_way_split(1001, (0.5, 0.25, 0.25), 9).unwrap();
        let b = three_way_split(1001, (0.5, 0.25, 0.25), 9).unwrap();
        assert_eq!(a, b);

        let mut all: Vec<usize> = a
            .train
            .iter()
            .chain(&a.calibration)
            .chain(&a.test)
            .copied()
            .collect();
        all.sort_unstable();
        assert_eq!(all, (0..1001).collect::<Vec<_>>());
    }

    #[test]
    fn bad_fractions_rejected() {
        assert!(matches!(
            three_way_split(10, (0.5, 0.5, 0.5), 1),
            Err(Error::InvalidFractions)
        ));
        assert!(matches!(
            three_way_split(10, (1.0, 0.0, 0.0), 1),
            Err(Error::InvalidFractions)
        ));
    }
}
