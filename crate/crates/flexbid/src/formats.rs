//! On-disk formats.
//!
//! * Offers: CSV `id,t_es,t_ls,profile`, the profile as kW values joined by
//!   `;` with three decimals. A `.json` path switches to a JSON array of
//!   offers at full precision.
//! * Aggregates: the offer columns plus `constituents` and `starts` (comma
//!   joined, same order) and `traded` (1-based order rank, empty if untraded).
//! * Prices: CSV `hour,price_eur_mwh`, hours `0..n` in order.
//!
//! Numbers use a decimal point and no thousands separators.

use std::fmt::Write as _;
use std::path::Path;

use flexbid_core::aggregation::aggregate_at;
use flexbid_core::heuristics::{MaggResult, MaggStats};
use flexbid_core::{AggregatedFlexOffer, Alignment, FlexOffer, PriceCurve};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Written profile values are rounded to this many decimals.
pub const PROFILE_DECIMALS: usize = 3;
/// Tolerance when checking a written aggregate profile against its constituents.
const PROFILE_CHECK_KW: f64 = 1e-3 * 1.5;

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

fn join_profile(profile: &[f64]) -> String {
    let mut s = String::new();
    for (i, p) in profile.iter().enumerate() {
        if i > 0 {
            s.push(';');
        }
        let _ = write!(s, "{p:.PROFILE_DECIMALS$}");
    }
    s
}

fn parse_number<T: std::str::FromStr>(path: &Path, line: usize, column: &str, raw: &str) -> Result<T> {
    raw.trim()
        .parse()
        .map_err(|_| CliError::format(path, format!("line {line}: column {column}: cannot parse {raw:?}")))
}

fn parse_profile(path: &Path, line: usize, raw: &str) -> Result<Vec<f64>> {
    raw.split(';').map(|v| parse_number(path, line, "profile", v)).collect()
}

fn parse_ids(path: &Path, line: usize, column: &str, raw: &str) -> Result<Vec<u32>> {
    raw.split(',').map(|v| parse_number(path, line, column, v)).collect()
}

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes())
}

fn check_header(path: &Path, reader: &mut csv::Reader<&[u8]>, expected: &[&str]) -> Result<()> {
    let header = reader.headers().map_err(|e| CliError::format(path, e.to_string()))?;
    let got: Vec<&str> = header.iter().map(str::trim).collect();
    if got != expected {
        return Err(CliError::format(
            path,
            format!("header {:?}, expected {:?}", got.join(","), expected.join(",")),
        ));
    }
    Ok(())
}

const FO_HEADER: [&str; 4] = ["id", "t_es", "t_ls", "profile"];

pub fn offers_to_csv(fos: &[FlexOffer]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(FO_HEADER).expect("in-memory write");
    for f in fos {
        w.write_record([
            f.id().to_string(),
            f.earliest_start().to_string(),
            f.latest_start().to_string(),
            join_profile(f.profile()),
        ])
        .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn offers_from_csv(path: &Path, text: &str) -> Result<Vec<FlexOffer>> {
    let mut reader = csv_reader(text);
    check_header(path, &mut reader, &FO_HEADER)?;
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| CliError::format(path, format!("line {line}: {e}")))?;
        let id = parse_number(path, line, "id", &rec[0])?;
        let es = parse_number(path, line, "t_es", &rec[1])?;
        let ls = parse_number(path, line, "t_ls", &rec[2])?;
        let profile = parse_profile(path, line, &rec[3])?;
        out.push(
            FlexOffer::new(id, es, ls, profile)
                .map_err(|e| CliError::format(path, format!("line {line}: {e}")))?,
        );
    }
    Ok(out)
}

pub fn offers_to_json(fos: &[FlexOffer]) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(fos).expect("offers serialize");
    bytes.push(b'\n');
    bytes
}

pub fn read_offers(path: &Path) -> Result<Vec<FlexOffer>> {
    let text = read_text(path)?;
    if is_json(path) {
        serde_json::from_str(&text).map_err(|e| CliError::format(path, e.to_string()))
    } else {
        offers_from_csv(path, &text)
    }
}

pub fn write_offers(path: &Path, fos: &[FlexOffer]) -> Result<()> {
    let bytes = if is_json(path) {
        offers_to_json(fos)
    } else {
        offers_to_csv(fos)
    };
    write_bytes(path, &bytes)
}

const AFO_HEADER: [&str; 7] = ["id", "t_es", "t_ls", "profile", "constituents", "starts", "traded"];

/// All completed aggregates of a result, in creation order.
pub fn aggregates_to_csv(result: &MaggResult) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(AFO_HEADER).expect("in-memory write");
    for afo in &result.all_afos {
        let rank = result
            .orders
            .iter()
            .position(|o| o == afo)
            .map(|r| (r + 1).to_string())
            .unwrap_or_default();
        let (ids, starts): (Vec<String>, Vec<String>) =
            afo.alignment().iter().map(|(id, s)| (id.to_string(), s.to_string())).unzip();
        w.write_record([
            afo.id().to_string(),
            afo.earliest_start().to_string(),
            afo.latest_start().to_string(),
            join_profile(afo.profile()),
            ids.join(","),
            starts.join(","),
            rank,
        ])
        .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

/// Rebuilds a result from an aggregate CSV and the offers it refers to.
///
/// Aggregates are recomputed from their constituents and starts; a written
/// window or profile that disagrees is an error. Offers in no aggregate
/// become the leftover set. Statistics are not stored and come back zeroed.
pub fn aggregates_from_csv(path: &Path, text: &str, fos: &[FlexOffer]) -> Result<MaggResult> {
    let by_id: std::collections::BTreeMap<u32, &FlexOffer> = fos.iter().map(|f| (f.id(), f)).collect();
    let mut reader = csv_reader(text);
    check_header(path, &mut reader, &AFO_HEADER)?;
    let mut all = Vec::new();
    let mut ranked: Vec<(usize, AggregatedFlexOffer)> = Vec::new();
    let mut used = std::collections::BTreeSet::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let bad = |msg: String| CliError::format(path, format!("line {line}: {msg}"));
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let ids = parse_ids(path, line, "constituents", &rec[4])?;
        let starts = parse_ids(path, line, "starts", &rec[5])?;
        if ids.len() != starts.len() {
            return Err(bad(format!("{} constituents but {} starts", ids.len(), starts.len())));
        }
        let mut members = Vec::with_capacity(ids.len());
        for id in &ids {
            let f = by_id.get(id).ok_or_else(|| bad(format!("constituent {id} is not in the offer file")))?;
            if !used.insert(*id) {
                return Err(bad(format!("constituent {id} appears in two aggregates")));
            }
            members.push((*f).clone());
        }
        let alignment: Alignment = ids.iter().copied().zip(starts.iter().copied()).collect();
        let afo = aggregate_at(&members, &alignment).map_err(|e| bad(e.to_string()))?;

        let id: u32 = parse_number(path, line, "id", &rec[0])?;
        let es: u32 = parse_number(path, line, "t_es", &rec[1])?;
        let ls: u32 = parse_number(path, line, "t_ls", &rec[2])?;
        let profile = parse_profile(path, line, &rec[3])?;
        let same_profile = profile.len() == afo.len()
            && profile.iter().zip(afo.profile()).all(|(a, b)| (a - b).abs() <= PROFILE_CHECK_KW);
        if (id, es, ls) != (afo.id(), afo.earliest_start(), afo.latest_start()) || !same_profile {
            return Err(bad("written aggregate does not match its constituents and starts".into()));
        }
        let rank = rec[6].trim();
        if !rank.is_empty() {
            ranked.push((parse_number(path, line, "traded", rank)?, afo.clone()));
        }
        all.push(afo);
    }
    ranked.sort_by_key(|(r, _)| *r);
    if ranked.iter().enumerate().any(|(i, (r, _))| *r != i + 1) {
        return Err(CliError::format(path, "traded ranks must be 1, 2, ... without gaps"));
    }
    Ok(MaggResult {
        orders: ranked.into_iter().map(|(_, a)| a).collect(),
        all_afos: all,
        leftover: fos.iter().filter(|f| !used.contains(&f.id())).cloned().collect(),
        stats: MaggStats::default(),
    })
}

pub fn read_aggregates(path: &Path, fos: &[FlexOffer]) -> Result<MaggResult> {
    aggregates_from_csv(path, &read_text(path)?, fos)
}

const PRICE_HEADER: [&str; 2] = ["hour", "price_eur_mwh"];

pub fn prices_to_csv(prices: &[f64]) -> Vec<u8> {
    let mut out = String::from("hour,price_eur_mwh\n");
    for (h, p) in prices.iter().enumerate() {
        let _ = writeln!(out, "{h},{p}");
    }
    out.into_bytes()
}

/// Hourly prices in file order. Hours must run `0, 1, 2, ...`.
pub fn prices_from_csv(path: &Path, text: &str) -> Result<Vec<f64>> {
    let mut reader = csv_reader(text);
    check_header(path, &mut reader, &PRICE_HEADER)?;
    let mut prices = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| CliError::format(path, format!("line {line}: {e}")))?;
        let hour: usize = parse_number(path, line, "hour", &rec[0])?;
        if hour != i {
            return Err(CliError::format(path, format!("line {line}: hour {hour}, expected {i}")));
        }
        let price: f64 = parse_number(path, line, "price_eur_mwh", &rec[1])?;
        if !price.is_finite() {
            return Err(CliError::format(path, format!("line {line}: price must be finite")));
        }
        prices.push(price);
    }
    if prices.is_empty() {
        return Err(CliError::format(path, "no prices"));
    }
    Ok(prices)
}

pub fn read_prices(path: &Path) -> Result<Vec<f64>> {
    prices_from_csv(path, &read_text(path)?)
}

pub fn read_curve(path: &Path) -> Result<PriceCurve> {
    Ok(PriceCurve::new(read_prices(path)?)?)
}

/// Column names of the hourly plot table, after `hour` and `price_eur_mwh`.
pub const PLOT_SERIES: [&str; 7] = ["plugin", "optimal", "sa", "sag", "lp", "dp", "dtf"];

/// Hourly table: price plus one scheduled-power column (MW) per series.
pub fn plot_csv(curve: &PriceCurve, series: &[(&str, &[f64])]) -> Vec<u8> {
    let mut out = String::from("hour,price_eur_mwh");
    for (name, _) in series {
        let _ = write!(out, ",{name}_mw");
    }
    out.push('\n');
    for (h, p) in curve.prices().iter().enumerate() {
        let _ = write!(out, "{h},{p}");
        for (_, values) in series {
            let _ = write!(out, ",{:.6}", values.get(h).copied().unwrap_or(0.0) / 1000.0);
        }
        out.push('\n');
    }
    out.into_bytes()
}

pub fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("report serialize");
    bytes.push(b'\n');
    bytes
}

pub fn from_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_text(path)?).map_err(|e| CliError::format(path, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use flexbid_core::heuristics::{run_method, MaggConfig, Method, Variant};

    fn fo(id: u32, es: u32, ls: u32, p: &[f64]) -> FlexOffer {
        FlexOffer::new(id, es, ls, p.to_vec()).unwrap()
    }

    #[test]
    fn offer_csv_round_trip() {
        let fos = vec![fo(1, 1, 4, &[2.405, 3.7, 3.7, 2.405]), fo(2, 0, 0, &[1.0])];
        let bytes = offers_to_csv(&fos);
        assert_eq!(
            String::from_utf8(bytes.clone()).unwrap(),
            "id,t_es,t_ls,profile\n1,1,4,2.405;3.700;3.700;2.405\n2,0,0,1.000\n"
        );
        assert_eq!(offers_from_csv(Path::new("x"), std::str::from_utf8(&bytes).unwrap()).unwrap(), fos);
    }

    #[test]
    fn offer_csv_errors_name_line_and_column() {
        let err = offers_from_csv(Path::new("f.csv"), "id,t_es,t_ls,profile\n1,2,x,1\n").unwrap_err();
        assert!(err.to_string().contains("line 2: column t_ls"), "{err}");
        let err = offers_from_csv(Path::new("f.csv"), "id,t_es,t_ls,profile\n1,5,4,1\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        assert!(offers_from_csv(Path::new("f.csv"), "id,start\n").is_err());
    }

    #[test]
    fn aggregate_csv_round_trip() {
        let fos = vec![fo(1, 1, 5, &[1.0, 1.0]), fo(2, 2, 3, &[1.0, 1.0]), fo(3, 4, 5, &[1.0])];
        let cfg = MaggConfig::new(Variant::Lp).with_lot(2.0);
        for method in Method::ALL {
            let r = run_method(&fos, method, &cfg).unwrap();
            let bytes = aggregates_to_csv(&r);
            let back = aggregates_from_csv(Path::new("a"), std::str::from_utf8(&bytes).unwrap(), &fos).unwrap();
            assert_eq!(back.orders, r.orders);
            assert_eq!(back.all_afos, r.all_afos);
            assert_eq!(back.leftover, r.leftover);
        }
    }

    #[test]
    fn tampered_aggregate_is_rejected() {
        let fos = vec![fo(1, 1, 5, &[1.0, 1.0]), fo(2, 2, 3, &[1.0, 1.0])];
        let text = "id,t_es,t_ls,profile,constituents,starts,traded\n1,2,3,2.000;2.500,\"1,2\",\"2,2\",1\n";
        assert!(aggregates_from_csv(Path::new("a"), text, &fos).is_err());
        let ok = "id,t_es,t_ls,profile,constituents,starts,traded\n1,2,3,2.000;2.000,\"1,2\",\"2,2\",1\n";
        assert_eq!(aggregates_from_csv(Path::new("a"), ok, &fos).unwrap().orders.len(), 1);
    }

    #[test]
    fn price_csv_rules() {
        let p = Path::new("p.csv");
        assert_eq!(prices_from_csv(p, "hour,price_eur_mwh\n0,25\n1,33.5\n").unwrap(), [25.0, 33.5]);
        assert!(prices_from_csv(p, "hour,price_eur_mwh\n0,1,000\n").is_err());
        assert!(prices_from_csv(p, "hour,price_eur_mwh\n1,25\n").is_err());
        assert!(prices_from_csv(p, "hour,price_eur_mwh\n0,25,5\n").is_err());
        assert!(prices_from_csv(p, "hour,price_eur_mwh\n0,NaN\n").is_err());
        assert!(prices_from_csv(p, "hour,price_eur_mwh\n").is_err());
        let prices = [25.0, -3.25, 0.1];
        assert_eq!(prices_from_csv(p, std::str::from_utf8(&prices_to_csv(&prices)).unwrap()).unwrap(), prices);
    }

    #[test]
    fn plot_columns() {
        let curve = PriceCurve::new(vec![10.0, 20.0]).unwrap();
        let zeros = [0.0, 0.0];
        let series: Vec<(&str, &[f64])> = PLOT_SERIES.iter().map(|n| (*n, &zeros[..])).collect();
        let text = String::from_utf8(plot_csv(&curve, &series)).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "hour,price_eur_mwh,plugin_mw,optimal_mw,sa_mw,sag_mw,lp_mw,dp_mw,dtf_mw"
        );
        assert_eq!(text.lines().count(), 3);
    }
}
