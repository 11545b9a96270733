use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::CliError;

const REQUIRED: [&str; 8] = ["policy", "csf", "profit", "sp_pct", "serial_ms", "parallel_lb_ms", "gap", "status"];

#[derive(Default)]
struct Acc {
    n: usize,
    profit: f64,
    sp_pct: f64,
    serial_ms: f64,
    parallel_lb_ms: f64,
    gap: f64,
    gaps: usize,
}

/// Per (policy, csf) means over the data rows of a bench `results.csv`.
/// Aggregate and failed rows are skipped.
pub fn summarize(csv_text: &[u8]) -> Result<String, CliError> {
    if csv_text.iter().all(u8::is_ascii_whitespace) {
        return Ok("no rows\n".into());
    }
    let mut reader = csv::Reader::from_reader(csv_text);
    let headers = reader.headers().map_err(|e| CliError::Validation(format!("results CSV: {e}")))?.clone();
    let mut index = BTreeMap::new();
    for col in REQUIRED {
        let i = headers
            .iter()
            .position(|h| h == col)
            .ok_or_else(|| CliError::Validation(format!("results CSV is missing column `{col}`")))?;
        index.insert(col, i);
    }
    let mut groups: BTreeMap<(String, String), Acc> = BTreeMap::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Validation(format!("results CSV: {e}")))?;
        let field = |c: &str| record.get(index[c]).unwrap_or("");
        if !field("status").starts_with("ok") {
            continue;
        }
        let parse = |c: &str| -> Result<f64, CliError> {
            field(c).parse().map_err(|_| CliError::Validation(format!("data row {}: bad `{c}` value {:?}", line + 1, field(c))))
        };
        let acc = groups.entry((field("policy").to_string(), field("csf").to_string())).or_default();
        acc.n += 1;
        acc.profit += parse("profit")?;
        acc.sp_pct += parse("sp_pct")?;
        acc.serial_ms += parse("serial_ms")?;
        acc.parallel_lb_ms += parse("parallel_lb_ms")?;
        if !field("gap").is_empty() {
            acc.gap += parse("gap")?;
            acc.gaps += 1;
        }
    }
    if groups.is_empty() {
        return Ok("no rows\n".into());
    }
    let mut keys: Vec<&(String, String)> = groups.keys().collect();
    keys.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.parse::<f64>().unwrap_or(f64::NAN).total_cmp(&b.1.parse().unwrap_or(f64::NAN))));
    let mut out = format!(
        "{:<8} {:>6} {:>5} {:>12} {:>8} {:>11} {:>11} {:>10}\n",
        "policy", "csf", "n", "profit", "sp_pct", "serial_ms", "par_lb_ms", "gap"
    );
    for key in keys {
        let a = &groups[key];
        let n = a.n as f64;
        let gap = if a.gaps == 0 { String::from("-") } else { format!("{:.4}", a.gap / a.gaps as f64) };
        let _ = writeln!(
            out,
            "{:<8} {:>6} {:>5} {:>12.2} {:>8.2} {:>11.2} {:>11.2} {:>10}",
            key.0,
            key.1,
            a.n,
            a.profit / n,
            a.sp_pct / n,
            a.serial_ms / n,
            a.parallel_lb_ms / n,
            gap
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEAD: &str = "instance_id,seed,policy,csf,walk_m,k_scenarios,profit,served,total_requests,sp_pct,serial_ms,parallel_lb_ms,gap,status\n";

    #[test]
    fn groups_by_policy_and_csf() {
        let text = format!(
            "{HEAD}a,0,ha,0.2,100,5,10,1,2,50,3,1,0.5,ok\nb,1,ha,0.2,100,5,20,2,2,100,5,1,0.25,ok\n\
             aggregate,,ha,0.2,100,5,15,1.5,2,75,4,1,0.375,aggregate n=2 errors=0\nc,2,ha,0.4,100,5,,,,,,,,error: x\n"
        );
        let table = summarize(text.as_bytes()).unwrap();
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[1].starts_with("ha"));
        assert!(lines[1].contains("15.00") && lines[1].contains("75.00") && lines[1].contains("0.3750"));
    }

    #[test]
    fn header_only_has_no_rows() {
        assert_eq!(summarize(HEAD.as_bytes()).unwrap(), "no rows\n");
        assert_eq!(summarize(b"").unwrap(), "no rows\n");
    }

    #[test]
    fn missing_column_is_named() {
        let err = summarize(b"policy,csf\nha,0.2\n").unwrap_err();
        assert!(err.to_string().contains("`profit`"));
        assert_eq!(err.exit_code(), 2);
    }
}
