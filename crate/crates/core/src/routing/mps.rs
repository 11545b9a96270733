//! Mixed-integer formulation in fixed-format MPS.
//!
//! Columns are `X_<i>_<j>` (arc used), `Y_<r>` (request accepted) and `T_<h>`
//! (departure time at `f_h`). The objective row `PROFIT` is minimized and
//! holds the negated profit. Row families:
//!
//! * `PICK_<r>` / `DROP_<r>`: a request is accepted only if the route boards
//!   it at a pickup stop (outgoing arc used) and alights it at a dropoff stop
//!   (incoming arc used);
//! * `FLOW_<i>`: flow conservation, source `f_1`, sink `f_{n+1}`;
//! * `TIME_<h>`: `T_h + sum(time * X over segment h) - T_{h+1} <= 0`;
//! * `SEC_<k>`: subtour cuts added by the cut loop.
//!
//! Windows are the bounds of `T_h`; pinned acceptance decisions are `FX`
//! bounds on `Y_r`. The exponential subtour family is never emitted up front.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use crate::model::{Network, Request, RequestId, StopId};

/// Partial assignment of acceptance variables.
pub type Fixing = BTreeMap<RequestId, bool>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum RowKind {
    N,
    L,
    E,
}

impl RowKind {
    fn code(self) -> &'static str {
        match self {
            RowKind::N => "N",
            RowKind::L => "L",
            RowKind::E => "E",
        }
    }
}

struct Column {
    name: String,
    integer: bool,
    entries: Vec<(usize, f64)>,
    bound: Bound,
}

enum Bound {
    Binary,
    Fixed(f64),
    Range(f64, f64),
}

/// Problem builder over one network and request set.
pub struct DasModel<'a> {
    network: &'a Network,
    requests: &'a [Request],
    fixed: Fixing,
    cuts: Vec<BTreeSet<StopId>>,
}

pub fn arc_var(from: StopId, to: StopId) -> String {
    format!("X_{from}_{to}")
}

pub fn request_var(id: RequestId) -> String {
    format!("Y_{id}")
}

pub fn time_var(h: usize) -> String {
    format!("T_{h}")
}

/// Problem 1 over `requests` with `fixed` acceptance decisions, as MPS text.
pub fn export_mps(network: &Network, requests: &[Request], fixed: &Fixing) -> String {
    DasModel::new(network, requests, fixed.clone()).to_mps()
}

impl<'a> DasModel<'a> {
    pub fn new(network: &'a Network, requests: &'a [Request], fixed: Fixing) -> Self {
        DasModel { network, requests, fixed, cuts: Vec::new() }
    }

    pub fn network(&self) -> &'a Network {
        self.network
    }

    pub fn requests(&self) -> &'a [Request] {
        self.requests
    }

    pub fn cuts(&self) -> &[BTreeSet<StopId>] {
        &self.cuts
    }

    /// Adds `sum(X_ij : i, j in stops, i != j) <= |stops| - 1`.
    pub fn add_subtour_cut(&mut self, stops: BTreeSet<StopId>) {
        if stops.len() >= 2 && !self.cuts.contains(&stops) {
            self.cuts.push(stops);
        }
    }

    fn build(&self) -> (Vec<(String, RowKind)>, Vec<Column>, Vec<(usize, f64)>) {
        let net = self.network;
        let n = net.n_segments();
        let mut rows: Vec<(String, RowKind)> = vec![("PROFIT".into(), RowKind::N)];
        let mut row_of = BTreeMap::new();
        let mut add_row = |name: String, kind: RowKind, rows: &mut Vec<(String, RowKind)>| {
            rows.push((name.clone(), kind));
            row_of.insert(name, rows.len() - 1);
            rows.len() - 1
        };
        let mut pick_row = Vec::new();
        let mut drop_row = Vec::new();
        for r in self.requests {
            pick_row.push(add_row(format!("PICK_{}", r.id), RowKind::L, &mut rows));
            drop_row.push(add_row(format!("DROP_{}", r.id), RowKind::L, &mut rows));
        }
        let mut flow_row = BTreeMap::new();
        for s in net.stops() {
            flow_row.insert(s.id, add_row(format!("FLOW_{}", s.id), RowKind::E, &mut rows));
        }
        let mut time_row = Vec::new();
        for h in 1..=n {
            time_row.push(add_row(format!("TIME_{h}"), RowKind::L, &mut rows));
        }
        let mut cut_rows = Vec::new();
        for (k, _) in self.cuts.iter().enumerate() {
            cut_rows.push(add_row(format!("SEC_{k}"), RowKind::L, &mut rows));
        }

        let mut rhs = Vec::new();
        rhs.push((flow_row[&net.first_stop()], 1.0));
        rhs.push((flow_row[&net.last_stop()], -1.0));
        for (k, cut) in self.cuts.iter().enumerate() {
            rhs.push((cut_rows[k], cut.len() as f64 - 1.0));
        }

        let mut columns = Vec::new();
        for a in net.arcs() {
            let mut entries = vec![(0, a.cost)];
            for (ri, r) in self.requests.iter().enumerate() {
                if r.pickup.contains(&a.from) {
                    entries.push((pick_row[ri], -1.0));
                }
                if r.dropoff.contains(&a.to) {
                    entries.push((drop_row[ri], -1.0));
                }
            }
            entries.push((flow_row[&a.from], 1.0));
            entries.push((flow_row[&a.to], -1.0));
            if let Some(h) = arc_segment(net, a.from) {
                entries.push((time_row[h - 1], a.time_s));
            }
            for (k, cut) in self.cuts.iter().enumerate() {
                if cut.contains(&a.from) && cut.contains(&a.to) {
                    entries.push((cut_rows[k], 1.0));
                }
            }
            entries.sort_by_key(|&(row, _)| row);
            columns.push(Column { name: arc_var(a.from, a.to), integer: true, entries, bound: Bound::Binary });
        }
        for (ri, r) in self.requests.iter().enumerate() {
            let entries = vec![(0, -r.utility), (pick_row[ri], 1.0), (drop_row[ri], 1.0)];
            let bound = match self.fixed.get(&r.id) {
                Some(&v) => Bound::Fixed(if v { 1.0 } else { 0.0 }),
                None => Bound::Binary,
            };
            columns.push(Column { name: request_var(r.id), integer: true, entries, bound });
        }
        for h in 1..=n + 1 {
            let mut entries = Vec::new();
            if h >= 2 {
                entries.push((time_row[h - 2], -1.0));
            }
            if h <= n {
                entries.push((time_row[h - 1], 1.0));
            }
            entries.sort_by_key(|&(row, _)| row);
            let w = net.window(h).expect("validated network has every window");
            columns.push(Column { name: time_var(h), integer: false, entries, bound: Bound::Range(w.a_s, w.b_s) });
        }
        (rows, columns, rhs)
    }

    pub fn row_count(&self) -> usize {
        self.build().0.len()
    }

    pub fn column_count(&self) -> usize {
        self.build().1.len()
    }

    pub fn to_mps(&self) -> String {
        let (rows, columns, rhs) = self.build();
        let mut out = String::new();
        out.push_str("NAME          DAS\n");
        out.push_str("ROWS\n");
        for (name, kind) in &rows {
            line(&mut out, kind.code(), name, "", "", "", "");
        }
        out.push_str("COLUMNS\n");
        let mut in_int = false;
        let mut marker = 0;
        for col in &columns {
            if col.integer != in_int {
                let tag = if col.integer { "'INTORG'" } else { "'INTEND'" };
                line(&mut out, "", &format!("MARKER{marker:02}"), "'MARKER'", "", tag, "");
                marker += 1;
                in_int = col.integer;
            }
            for &(row, coef) in &col.entries {
                line(&mut out, "", &col.name, &rows[row].0, &num(coef), "", "");
            }
        }
        if in_int {
            line(&mut out, "", &format!("MARKER{marker:02}"), "'MARKER'", "", "'INTEND'", "");
        }
        out.push_str("RHS\n");
        for &(row, val) in &rhs {
            line(&mut out, "", "RHS", &rows[row].0, &num(val), "", "");
        }
        out.push_str("BOUNDS\n");
        for col in &columns {
            match col.bound {
                Bound::Binary => line(&mut out, "UP", "BND", &col.name, "1", "", ""),
                Bound::Fixed(v) => line(&mut out, "FX", "BND", &col.name, &num(v), "", ""),
                Bound::Range(lo, hi) => {
                    line(&mut out, "LO", "BND", &col.name, &num(lo), "", "");
                    line(&mut out, "UP", "BND", &col.name, &num(hi), "", "");
                }
            }
        }
        out.push_str("ENDATA\n");
        out
    }
}

/// Segment an arc belongs to, identified by its tail.
fn arc_segment(net: &Network, tail: StopId) -> Option<usize> {
    let s = net.stop(tail)?;
    match s.kind {
        crate::model::StopKind::Optional => Some(s.segment),
        crate::model::StopKind::Compulsory if s.segment <= net.n_segments() => Some(s.segment),
        crate::model::StopKind::Compulsory => None,
    }
}

fn num(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

/// Fixed-format field layout: columns 2-3, 5-12, 15-22, 25-36, 40-47, 50-61.
/// Longer names shift the following fields; fields stay blank-separated.
fn line(out: &mut String, f1: &str, f2: &str, f3: &str, f4: &str, f5: &str, f6: &str) {
    let mut s = format!(" {f1:<2} {f2:<8}  {f3:<8}  {f4:>12}   {f5:<8}  {f6:>12}");
    s.truncate(s.trim_end().len());
    let _ = writeln!(out, "{s}");
}
