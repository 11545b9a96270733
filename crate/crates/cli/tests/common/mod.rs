#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

pub const TIMING_KEYS: [&str; 7] =
    ["solve_time_ms", "wall_times_s", "serial_time_s", "parallel_time_lb_s", "serial_ms", "parallel_lb_ms", "serial_ms_mean"];

pub fn das(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_das")).args(args).output().expect("das runs")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().unwrap_or(-1)
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn strip_json(v: &mut Value) {
    match v {
        Value::Object(map) => {
            map.retain(|k, _| !TIMING_KEYS.contains(&k.as_str()));
            map.values_mut().for_each(strip_json);
        }
        Value::Array(items) => items.iter_mut().for_each(strip_json),
        _ => {}
    }
}

fn is_timing_column(name: &str) -> bool {
    name.ends_with("_ms") || name.ends_with("_ms_mean")
}

/// The text with timing fields removed: JSON keys holding wall times, and CSV
/// columns measured in milliseconds.
pub fn without_timing(text: &str) -> String {
    if let Ok(mut v) = serde_json::from_str::<Value>(text) {
        strip_json(&mut v);
        return v.to_string();
    }
    let mut lines = text.lines();
    let Some(header) = lines.next() else { return String::new() };
    let keep: Vec<bool> = header.split(',').map(|c| !is_timing_column(c)).collect();
    if keep.iter().all(|&k| k) {
        return text.to_string();
    }
    std::iter::once(header)
        .chain(lines)
        .map(|l| l.split(',').zip(&keep).filter(|(_, &k)| k).map(|(f, _)| f).collect::<Vec<_>>().join(","))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Every file under `dir`, keyed by relative path, with timing removed.
pub fn snapshot(dir: &Path) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(rel, without_timing(&std::fs::read_to_string(&path).unwrap()));
            }
        }
    }
    out
}
