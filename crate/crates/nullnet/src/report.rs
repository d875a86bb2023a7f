//! Report generation behind the command-line interface: single-dataset fit
//! reports, batch tables over a dataset manifest, per-node error dumps for
//! plotting, and synthetic-graph sampling.
//!
//! All floating-point output goes through a fixed 6-significant-digit format,
//! and every pipeline underneath is deterministic, so repeated runs on the
//! same inputs produce byte-identical files.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::certificate::{certificate, check_bounds, error_report, Certificate};
use crate::error::{Error, Result};
use crate::estimate::{
    calibrated_alpha, fit_mle, plugin_estimate, sample_graph, FitOptions, FitResult,
};
use crate::graph::Graph;
use crate::link::Link;

/// Render a float with 6 significant digits, trimming trailing zeros.
pub fn fmt_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-4..6).contains(&exp) {
        format!("{:.5e}", x)
    } else {
        let decimals = (5 - exp).max(0) as usize;
        let s = format!("{:.*}", decimals, x);
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_sig6).unwrap_or_default()
}

/// Parse a dataset manifest: one `name = path` pair per line, `#` comments.
/// Paths are resolved relative to the manifest's directory.
pub fn parse_manifest(path: &Path) -> Result<Vec<(String, PathBuf)>> {
    let text = std::fs::read_to_string(path)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut entries = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let Some((name, rel)) = trimmed.split_once('=') else {
            return Err(Error::ManifestLine { line: lineno + 1 });
        };
        let name = name.trim();
        let rel = rel.trim();
        if name.is_empty() || rel.is_empty() {
            return Err(Error::ManifestLine { line: lineno + 1 });
        }
        entries.push((name.to_string(), base.join(rel)));
    }
    Ok(entries)
}

fn read_graph(path: &Path) -> Result<Graph> {
    let file = File::open(path)?;
    Graph::parse_edge_list(BufReader::new(file))
}

fn write_certificate(cert: &Certificate, out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "[certificate]")?;
    writeln!(out, "c0 = {}", fmt_sig6(cert.c0))?;
    writeln!(out, "eps0 = {}", fmt_sig6(cert.eps0))?;
    writeln!(out, "eps_bar0 = {}", fmt_sig6(cert.eps_bar0))?;
    writeln!(out, "c = {}", fmt_sig6(cert.c))?;
    writeln!(out, "c1 = {}", fmt_sig6(cert.c1))?;
    writeln!(out, "c2 = {}", fmt_sig6(cert.c2))?;
    writeln!(out, "applies = {}", cert.applies)?;
    writeln!(out, "status = {}", cert.status)?;
    writeln!(out, "b0 = {}", fmt_sig6(cert.b0))?;
    writeln!(out, "kappa = {}", fmt_sig6(cert.kappa))?;
    writeln!(out, "delta = {}", fmt_sig6(cert.delta))?;
    writeln!(out, "lambda = {}", fmt_sig6(cert.lambda))?;
    writeln!(out, "h = {}", fmt_sig6(cert.h))?;
    writeln!(out, "t_star = {}", fmt_sig6(cert.t_star))?;
    writeln!(out, "r = {}", fmt_sig6(cert.r))?;
    Ok(())
}

/// Fit one dataset and write the full key-value report: graph summary,
/// plug-in estimate, fit, certificate, realized errors, and bound verdicts.
///
/// On a fit failure the graph, plug-in, and certificate sections still print
/// before the error propagates (the CLI maps `MleDiverged` to exit status 2).
pub fn cmd_fit(path: &Path, link: &Link, opts: &FitOptions, out: &mut dyn Write) -> Result<()> {
    let g = read_graph(path)?;
    let stats = g.sparsity_stats()?;

    writeln!(out, "[graph]")?;
    writeln!(out, "path = {}", path.display())?;
    writeln!(out, "n = {}", g.n())?;
    writeln!(out, "x_plus_plus = {}", g.total_degree())?;
    writeln!(out, "max_degree = {}", g.max_degree())?;
    writeln!(out, "min_degree = {}", g.min_degree())?;
    writeln!(out, "eps0 = {}", fmt_sig6(stats.eps0))?;
    writeln!(out)?;

    if g.min_degree() == 0 {
        return Err(Error::IsolatedNode);
    }
    let plug = plugin_estimate(&g)?;
    writeln!(out, "[plugin]")?;
    writeln!(out, "link = {}", link.name())?;
    writeln!(out, "valid_pct = {}", fmt_sig6(100.0 * stats.valid_fraction(link.c0())))?;
    let lo = plug.alpha_tilde.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = plug.alpha_tilde.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    writeln!(out, "alpha_tilde_min = {}", fmt_sig6(lo))?;
    writeln!(out, "alpha_tilde_max = {}", fmt_sig6(hi))?;
    match plug.ll_tilde {
        Some(v) => writeln!(out, "ll_tilde = {}", fmt_sig6(v))?,
        None => writeln!(out, "ll_tilde = undefined")?,
    }
    writeln!(out)?;

    let cert = certificate(&g, link)?;
    write_certificate(&cert, out)?;
    writeln!(out)?;

    let fit = match fit_mle(&g, link, opts) {
        Ok(f) => f,
        Err(e) => {
            writeln!(out, "[fit]")?;
            writeln!(out, "converged = false")?;
            writeln!(out, "error = {e}")?;
            return Err(e);
        }
    };
    writeln!(out, "[fit]")?;
    writeln!(out, "solver = {}", fit.solver)?;
    writeln!(out, "converged = {}", fit.converged)?;
    writeln!(out, "iterations = {}", fit.iterations)?;
    writeln!(out, "score_norm = {}", fmt_sig6(fit.score_norm))?;
    writeln!(out, "ll_hat = {}", fmt_sig6(fit.ll_hat))?;
    writeln!(out)?;

    let rep = error_report(&g, link, &fit, &plug)?;
    writeln!(out, "[error]")?;
    writeln!(out, "sup_err = {}", fmt_sig6(rep.sup_err))?;
    writeln!(out, "l2_err = {}", fmt_sig6(rep.l2_err))?;
    writeln!(out, "scaled_sup = {}", fmt_sig6(rep.scaled_sup))?;
    writeln!(out, "scaled_l2 = {}", fmt_sig6(rep.scaled_l2))?;
    writeln!(out, "p_rel_max = {}", fmt_sig6(rep.p_rel_max))?;
    match rep.ll_rel {
        Some(v) => writeln!(out, "ll_rel = {}", fmt_sig6(v))?,
        None => writeln!(out, "ll_rel = undefined")?,
    }
    writeln!(out)?;

    let verdict = check_bounds(&cert, &rep);
    writeln!(out, "[bounds]")?;
    writeln!(out, "applies = {}", verdict.applies)?;
    writeln!(out, "sup_within_c_eps0 = {}", verdict.sup_ok)?;
    writeln!(out, "p_rel_within_c1_eps0 = {}", verdict.p_rel_ok)?;
    match verdict.ll_rel_ok {
        Some(v) => writeln!(out, "ll_rel_within_c2_eps0 = {v}")?,
        None => writeln!(out, "ll_rel_within_c2_eps0 = undefined")?,
    }
    Ok(())
}

/// One `(dataset, link)` row of the batch table.
#[derive(Debug, Clone)]
pub struct TableRow {
    pub dataset: String,
    pub n: usize,
    pub x_plus_plus: u64,
    pub max_degree: u32,
    pub link: String,
    pub valid_pct: Option<f64>,
    pub scaled_l2: Option<f64>,
    pub scaled_sup: Option<f64>,
    pub converged: bool,
    pub iterations: usize,
}

/// The three links in reporting order.
pub fn report_links() -> [Link; 3] {
    [Link::cloglog(), Link::log(), Link::logit()]
}

/// Fit every manifest dataset under the three built-in links.
///
/// Per-dataset failures (unreadable files, diverging fits) land in their rows
/// with `converged = false`; the batch never aborts.
pub fn table_rows(manifest: &Path, opts: &FitOptions) -> Result<Vec<TableRow>> {
    let entries = parse_manifest(manifest)?;
    let mut rows = Vec::new();
    for (name, path) in entries {
        match read_graph(&path) {
            Ok(g) => {
                for link in report_links() {
                    rows.push(dataset_row(&name, &g, &link, opts));
                }
            }
            Err(_) => {
                for link in report_links() {
                    rows.push(TableRow {
                        dataset: name.clone(),
                        n: 0,
                        x_plus_plus: 0,
                        max_degree: 0,
                        link: link.name().to_string(),
                        valid_pct: None,
                        scaled_l2: None,
                        scaled_sup: None,
                        converged: false,
                        iterations: 0,
                    });
                }
            }
        }
    }
    Ok(rows)
}

fn dataset_row(name: &str, g: &Graph, link: &Link, opts: &FitOptions) -> TableRow {
    let valid_pct = g
        .sparsity_stats()
        .ok()
        .map(|s| 100.0 * s.valid_fraction(link.c0()));
    let mut row = TableRow {
        dataset: name.to_string(),
        n: g.n(),
        x_plus_plus: g.total_degree(),
        max_degree: g.max_degree(),
        link: link.name().to_string(),
        valid_pct,
        scaled_l2: None,
        scaled_sup: None,
        converged: false,
        iterations: 0,
    };
    let Ok(plug) = plugin_estimate(g) else {
        return row;
    };
    match fit_mle(g, link, opts) {
        Ok(fit) => {
            row.converged = fit.converged;
            row.iterations = fit.iterations;
            if let Ok(rep) = error_report(g, link, &fit, &plug) {
                row.scaled_l2 = Some(rep.scaled_l2);
                row.scaled_sup = Some(rep.scaled_sup);
            }
        }
        Err(Error::MleDiverged { iterations, .. }) => row.iterations = iterations,
        Err(Error::LineSearchFailed { iteration }) => row.iterations = iteration,
        Err(_) => {}
    }
    row
}

/// CSV header shared by the table outputs.
pub const TABLE_CSV_HEADER: &str =
    "dataset,n,x_plus_plus,max_degree,link,valid_pct,scaled_l2,scaled_sup,converged,iterations";

pub fn write_table_csv(rows: &[TableRow], out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "{TABLE_CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.dataset,
            r.n,
            r.x_plus_plus,
            r.max_degree,
            r.link,
            fmt_opt(r.valid_pct),
            fmt_opt(r.scaled_l2),
            fmt_opt(r.scaled_sup),
            r.converged,
            r.iterations
        )?;
    }
    Ok(())
}

pub fn write_table_text(rows: &[TableRow], out: &mut dyn Write) -> std::io::Result<()> {
    let header = [
        "dataset", "n", "x++", "max_deg", "link", "valid%", "scaled_l2", "scaled_sup", "conv",
        "iters",
    ];
    let mut cells: Vec<[String; 10]> = vec![header.map(str::to_string)];
    for r in rows {
        cells.push([
            r.dataset.clone(),
            r.n.to_string(),
            r.x_plus_plus.to_string(),
            r.max_degree.to_string(),
            r.link.clone(),
            fmt_opt(r.valid_pct),
            fmt_opt(r.scaled_l2),
            fmt_opt(r.scaled_sup),
            r.converged.to_string(),
            r.iterations.to_string(),
        ]);
    }
    let mut widths = [0usize; 10];
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    for row in &cells {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        writeln!(out, "{}", line.join("  ").trim_end())?;
    }
    Ok(())
}

/// Batch table: aligned text to `text_out`, CSV to `csv_out`.
pub fn cmd_table(
    manifest: &Path,
    opts: &FitOptions,
    text_out: &mut dyn Write,
    csv_out: &mut dyn Write,
) -> Result<()> {
    let rows = table_rows(manifest, opts)?;
    write_table_text(&rows, text_out)?;
    write_table_csv(&rows, csv_out)?;
    Ok(())
}

/// One node's scaled error under one link, for external plotting.
#[derive(Debug, Clone)]
pub struct FigurePoint {
    pub node: String,
    pub degree: u32,
    pub link: String,
    pub scaled_error: f64,
}

/// Per-node scaled errors for each requested link, in link order then node
/// order. Fit failures propagate: a figure needs converged fits.
pub fn figure_points(g: &Graph, links: &[Link], opts: &FitOptions) -> Result<Vec<FigurePoint>> {
    let plug = plugin_estimate(g)?;
    let mut points = Vec::new();
    for link in links {
        let fit = fit_mle(g, link, opts)?;
        let rep = error_report(g, link, &fit, &plug)?;
        for (i, pn) in rep.per_node_scaled.iter().enumerate() {
            points.push(FigurePoint {
                node: g.label(i).to_string(),
                degree: pn.degree,
                link: link.name().to_string(),
                scaled_error: pn.scaled,
            });
        }
    }
    Ok(points)
}

pub fn cmd_figure(
    path: &Path,
    links: &[Link],
    opts: &FitOptions,
    out: &mut dyn Write,
) -> Result<()> {
    let g = read_graph(path)?;
    let points = figure_points(&g, links, opts)?;
    writeln!(out, "node,degree,link,scaled_error")?;
    for p in points {
        writeln!(out, "{},{},{},{}", p.node, p.degree, p.link, fmt_sig6(p.scaled_error))?;
    }
    Ok(())
}

/// Sample a synthetic graph: heterogeneous parameters calibrated to the
/// target mean degree, then one seeded Bernoulli draw per pair.
///
/// Writes the edge list to `out` and the generating parameters to
/// `<out>.alpha` (one `label value` line per node, full precision).
pub fn cmd_sample(
    n: usize,
    mean_degree: f64,
    link: &Link,
    seed: u64,
    out: &Path,
) -> Result<Graph> {
    let alpha = calibrated_alpha(n, mean_degree, link)?;
    let g = sample_graph(&alpha, link, seed)?;

    let mut gw = BufWriter::new(File::create(out)?);
    writeln!(
        gw,
        "# sampled graph: n = {n}, target mean degree = {mean_degree}, link = {}, seed = {seed}",
        link.name()
    )?;
    g.write_edge_list(&mut gw)?;
    gw.flush()?;

    let alpha_path = alpha_sidecar_path(out);
    let mut aw = BufWriter::new(File::create(&alpha_path)?);
    writeln!(aw, "# generating parameters, one `node alpha` line per node")?;
    for (i, a) in alpha.iter().enumerate() {
        writeln!(aw, "{i} {a:.17e}")?;
    }
    aw.flush()?;
    Ok(g)
}

/// Path of the parameter sidecar written next to a sampled graph.
pub fn alpha_sidecar_path(out: &Path) -> PathBuf {
    let mut os = out.as_os_str().to_os_string();
    os.push(".alpha");
    PathBuf::from(os)
}

/// Convenience wrapper returning a `FitResult` for criterion-style callers
/// that sample, then immediately fit.
pub fn fit_file(path: &Path, link: &Link, opts: &FitOptions) -> Result<(Graph, FitResult)> {
    let g = read_graph(path)?;
    let fit = fit_mle(&g, link, opts)?;
    Ok((g, fit))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(fmt_sig6(0.0), "0");
        assert_eq!(fmt_sig6(0.5), "0.5");
        assert_eq!(fmt_sig6(2.0 / 3.0), "0.666667");
        assert_eq!(fmt_sig6(-1234.5678), "-1234.57");
        assert_eq!(fmt_sig6(0.0094432187), "0.00944322");
        assert_eq!(fmt_sig6(1.852564e-7), "1.85256e-7");
        assert_eq!(fmt_sig6(1234567.0), "1.23457e6");
    }

    #[test]
    fn manifest_parsing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sets.txt");
        std::fs::write(&path, "# data\nkarate = graphs/karate.txt\n\npower=grid.txt\n").unwrap();
        let entries = parse_manifest(&path).unwrap();
        assert_eq!(entries.len(), 2);
        assert_eq!(entries[0].0, "karate");
        assert!(entries[0].1.ends_with("graphs/karate.txt"));
        assert_eq!(entries[1].0, "power");

        std::fs::write(&path, "karate graphs/karate.txt\n").unwrap();
        assert!(matches!(parse_manifest(&path), Err(Error::ManifestLine { line: 1 })));
    }

    #[test]
    fn missing_dataset_becomes_failed_rows() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = dir.path().join("m.txt");
        std::fs::write(&manifest, "ghost = nowhere.txt\n").unwrap();
        let rows = table_rows(&manifest, &FitOptions::default()).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows.iter().all(|r| !r.converged && r.n == 0));
    }

    #[test]
    fn empty_manifest_gives_empty_table() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = dir.path().join("m.txt");
        std::fs::write(&manifest, "# nothing here\n").unwrap();
        let rows = table_rows(&manifest, &FitOptions::default()).unwrap();
        assert!(rows.is_empty());
        let mut text = Vec::new();
        let mut csv = Vec::new();
        cmd_table(&manifest, &FitOptions::default(), &mut text, &mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 1); // header only
    }

    #[test]
    fn table_csv_is_byte_identical_across_runs() {
        let dir = tempfile::tempdir().unwrap();
        let gpath = dir.path().join("c4.txt");
        std::fs::write(&gpath, "0 1\n1 2\n2 3\n3 0\n").unwrap();
        let manifest = dir.path().join("m.txt");
        std::fs::write(&manifest, "c4 = c4.txt\n").unwrap();
        let run = || {
            let mut text = Vec::new();
            let mut csv = Vec::new();
            cmd_table(&manifest, &FitOptions::default(), &mut text, &mut csv).unwrap();
            (text, csv)
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn figure_points_max_matches_scaled_sup() {
        let g = Graph::parse_edge_list_str("a b\nb c\nc d\nd e\ne a").unwrap();
        let opts = FitOptions::default();
        let links = [Link::log()];
        let points = figure_points(&g, &links, &opts).unwrap();
        assert_eq!(points.len(), g.n());
        let max_abs = points.iter().fold(0.0f64, |m, p| m.max(p.scaled_error.abs()));
        let plug = plugin_estimate(&g).unwrap();
        let fit = fit_mle(&g, &Link::log(), &opts).unwrap();
        let rep = error_report(&g, &Link::log(), &fit, &plug).unwrap();
        assert!((max_abs - rep.scaled_sup).abs() < 1e-15);
    }

    #[test]
    fn figure_identity_case_is_all_zero() {
        use crate::estimate::SolverKind;
        let g = Graph::parse_edge_list_str("0 1\n1 2\n2 3\n3 0").unwrap();
        let plug = plugin_estimate(&g).unwrap();
        let fit = crate::estimate::FitResult {
            alpha_hat: plug.alpha_tilde.clone(),
            ll_hat: plug.ll_tilde.unwrap(),
            iterations: 0,
            score_norm: 0.0,
            solver: SolverKind::ExactNewton,
            converged: true,
            trace: vec![],
            iterates: None,
        };
        let rep = error_report(&g, &Link::log(), &fit, &plug).unwrap();
        assert!(rep.per_node_scaled.iter().all(|p| p.scaled == 0.0));
    }

    #[test]
    fn sample_command_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let out1 = dir.path().join("s1.txt");
        let out2 = dir.path().join("s2.txt");
        cmd_sample(60, 4.0, &Link::log(), 7, &out1).unwrap();
        cmd_sample(60, 4.0, &Link::log(), 7, &out2).unwrap();
        assert_eq!(std::fs::read(&out1).unwrap(), std::fs::read(&out2).unwrap());
        assert_eq!(
            std::fs::read(alpha_sidecar_path(&out1)).unwrap(),
            std::fs::read(alpha_sidecar_path(&out2)).unwrap()
        );
    }

    #[test]
    fn fit_report_sections_present() {
        let dir = tempfile::tempdir().unwrap();
        let gpath = dir.path().join("c4.txt");
        std::fs::write(&gpath, "0 1\n1 2\n2 3\n3 0\n").unwrap();
        let mut out = Vec::new();
        cmd_fit(&gpath, &Link::logit(), &FitOptions::default(), &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        for section in ["[graph]", "[plugin]", "[certificate]", "[fit]", "[error]", "[bounds]"] {
            assert!(text.contains(section), "missing {section} in:\n{text}");
        }
        assert!(text.contains("converged = true"));
    }

    #[test]
    fn fit_report_diverged_still_prints_context() {
        let dir = tempfile::tempdir().unwrap();
        let gpath = dir.path().join("p3.txt");
        std::fs::write(&gpath, "a b\nb c\n").unwrap();
        let mut out = Vec::new();
        let err = cmd_fit(&gpath, &Link::logit(), &FitOptions::default(), &mut out);
        assert!(matches!(err, Err(Error::MleDiverged { .. })));
        let text = String::from_utf8(out).unwrap();
        assert!(text.contains("[certificate]"));
        assert!(text.contains("converged = false"));
    }

    #[test]
    fn writer_error_does_not_panic() {
        struct Broken;
        impl std::io::Write for Broken {
            fn write(&mut self, _: &[u8]) -> std::io::Result<usize> {
                Err(std::io::Error::other("broken pipe"))
            }
            fn flush(&mut self) -> std::io::Result<()> {
                Ok(())
            }
        }
        let dir = tempfile::tempdir().unwrap();
        let gpath = dir.path().join("c4.txt");
        std::fs::write(&gpath, "0 1\n1 2\n2 3\n3 0\n").unwrap();
        let mut w = Broken;
        assert!(cmd_fit(&gpath, &Link::logit(), &FitOptions::default(), &mut w).is_err());
    }
}
