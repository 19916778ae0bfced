//! CSV and plot-script emitters. Numbers carry 17 significant digits.

use std::fmt::Write as _;

use faber_decay::{FovSample, Region};

pub fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Header `record,theta,re,im`. `sample` rows hold boundary points; the
/// fitted region follows as `center` and either `semi_axes` (re = a, im = b)
/// or `radius` (re = R).
pub fn fov_csv(samples: &[FovSample], region: &Region) -> String {
    let mut out = String::from("record,theta,re,im\n");
    for s in samples {
        writeln!(out, "sample,{},{},{}", num(s.theta), num(s.point.re), num(s.point.im)).unwrap();
    }
    let c = region.center();
    writeln!(out, "center,,{},{}", num(c.re), num(c.im)).unwrap();
    match region {
        Region::Ellipse(e) => writeln!(out, "semi_axes,,{},{}", num(e.a), num(e.b)).unwrap(),
        Region::Disk(d) => writeln!(out, "radius,,{},0", num(d.radius)).unwrap(),
    }
    out
}

/// One row of `decay.csv`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayRow {
    pub row: usize,
    pub entry: f64,
    pub bound: Option<f64>,
}

/// Header `row,entry,bound,valid`; rows without a valid bound carry `inf` and `0`.
pub fn decay_csv(rows: &[DecayRow]) -> String {
    let mut out = String::from("row,entry,bound,valid\n");
    for r in rows {
        match r.bound {
            Some(b) => writeln!(out, "{},{},{},1", r.row, num(r.entry), num(b)),
            None => writeln!(out, "{},{},inf,0", r.row, num(r.entry)),
        }
        .unwrap();
    }
    out
}

/// Gnuplot script for a log-scale comparison of a column against its envelope.
pub fn decay_plot(title: &str) -> String {
    format!(
        "# gnuplot script: entries of the studied column and their envelope\n\
         set datafile separator ','\n\
         set key autotitle columnhead\n\
         set logscale y\n\
         set format y '10^{{%L}}'\n\
         set xlabel 'row'\n\
         set title '{title}'\n\
         set terminal pngcairo size 900,600\n\
         set output 'decay.png'\n\
         plot 'decay.csv' using 1:2 with lines lw 2 title 'entry', \\\n     \
         'decay.csv' using 1:($4 == 1 ? $3 : 1/0) with points pt 2 title 'bound'\n"
    )
}

/// Gnuplot script for one or more residual histories.
pub fn history_plot(title: &str, files: &[&str]) -> String {
    let mut plots = Vec::new();
    for f in files {
        plots.push(format!("'{f}' using 1:2 with linespoints title '{f} r_m'"));
        plots.push(format!("'{f}' using 1:($3 > 0 ? $3 : 1/0) with points pt 2 title '{f} bound'"));
    }
    format!(
        "# gnuplot script: residual histories\n\
         set datafile separator ','\n\
         set logscale y\n\
         set format y '10^{{%L}}'\n\
         set xlabel 'step'\n\
         set title '{title}'\n\
         set terminal pngcairo size 900,600\n\
         set output 'history.png'\n\
         plot {}\n",
        plots.join(", \\\n     ")
    )
}
