//! Standalone SVG rendering for diagrams, barcodes, landscapes, Betti
//! curves and indicator series. Text-only output, no graphics
//! dependencies, so tests can inspect the markup directly.

use tda_core::summaries::{BettiCurve, Landscape, TsiSeries};
use tda_core::{Error, PersistenceDiagram, Result};

const W: f64 = 480.0;
const H: f64 = 360.0;
const MARGIN: f64 = 42.0;

fn header(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\">\n\
         <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"13\">{title}</text>\n",
        W / 2.0
    )
}

fn axes() -> String {
    format!(
        "<line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <line x1=\"{m}\" y1=\"{t}\" x2=\"{m}\" y2=\"{b}\" stroke=\"black\"/>\n",
        m = MARGIN,
        b = H - MARGIN,
        r = W - MARGIN,
        t = MARGIN
    )
}

fn no_features(title: &str) -> String {
    format!(
        "{}{}<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"14\" fill=\"gray\">no features</text>\n</svg>\n",
        header(title),
        axes(),
        W / 2.0,
        H / 2.0
    )
}

fn color(dim: usize) -> &'static str {
    match dim {
        0 => "#1f77b4",
        1 => "#d62728",
        _ => "#2ca02c",
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.3}")
}

/// Birth/death scatter with the y = x diagonal; essential classes are
/// drawn as triangles pinned to the top edge.
pub fn diagram_svg(dgm: &PersistenceDiagram) -> String {
    if dgm.pairs.is_empty() {
        return no_features("persistence diagram");
    }
    let max_finite = dgm
        .pairs
        .iter()
        .filter_map(|p| p.death)
        .fold(dgm.pairs.iter().map(|p| p.birth).fold(0.0, f64::max), f64::max);
    let scale = if max_finite > 0.0 { max_finite * 1.08 } else { 1.0 };
    let sx = |v: f64| MARGIN + v / scale * (W - 2.0 * MARGIN);
    let sy = |v: f64| H - MARGIN - v / scale * (H - 2.0 * MARGIN);
    let mut svg = header("persistence diagram");
    svg.push_str(&axes());
    svg.push_str(&format!(
        "<line class=\"diagonal\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" \
         stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n",
        fmt(sx(0.0)),
        fmt(sy(0.0)),
        fmt(sx(scale)),
        fmt(sy(scale))
    ));
    for p in &dgm.pairs {
        match p.death {
            Some(d) => svg.push_str(&format!(
                "<circle class=\"pair dim{}\" cx=\"{}\" cy=\"{}\" r=\"3.5\" fill=\"{}\" \
                 fill-opacity=\"0.75\"/>\n",
                p.dim,
                fmt(sx(p.birth)),
                fmt(sy(d)),
                color(p.dim)
            )),
            None => {
                let x = sx(p.birth);
                let y = MARGIN;
                svg.push_str(&format!(
                    "<polygon class=\"essential dim{}\" points=\"{},{} {},{} {},{}\" \
                     fill=\"{}\"/>\n",
                    p.dim,
                    fmt(x - 4.0),
                    fmt(y + 4.0),
                    fmt(x + 4.0),
                    fmt(y + 4.0),
                    fmt(x),
                    fmt(y - 4.0),
                    color(p.dim)
                ));
            }
        }
    }
    svg.push_str("</svg>\n");
    svg
}

/// Horizontal interval per feature, sorted by birth; essential bars run
/// to the plot edge and end in an arrowhead.
pub fn barcode_svg(dgm: &PersistenceDiagram) -> String {
    if dgm.pairs.is_empty() {
        return no_features("persistence barcode");
    }
    let max_finite = dgm
        .pairs
        .iter()
        .filter_map(|p| p.death)
        .fold(dgm.pairs.iter().map(|p| p.birth).fold(0.0, f64::max), f64::max);
    let scale = if max_finite > 0.0 { max_finite * 1.08 } else { 1.0 };
    let sx = |v: f64| MARGIN + v / scale * (W - 2.0 * MARGIN);
    let mut bars: Vec<&tda_core::PersistencePair> = dgm.pairs.iter().collect();
    bars.sort_by(|a, b| {
        a.dim
            .cmp(&b.dim)
            .then(a.birth.partial_cmp(&b.birth).unwrap())
            .then(
                a.death
                    .unwrap_or(f64::INFINITY)
                    .partial_cmp(&b.death.unwrap_or(f64::INFINITY))
                    .unwrap(),
            )
    });
    let lane = (H - 2.0 * MARGIN) / bars.len() as f64;
    let mut svg = header("persistence barcode");
    svg.push_str(
        "<defs><marker id=\"arrow\" markerWidth=\"8\" markerHeight=\"8\" refX=\"6\" refY=\"3\" \
         orient=\"auto\"><path d=\"M0,0 L6,3 L0,6 z\"/></marker></defs>\n",
    );
    svg.push_str(&axes());
    for (i, p) in bars.iter().enumerate() {
        let y = MARGIN + lane * (i as f64 + 0.5);
        match p.death {
            Some(d) => svg.push_str(&format!(
                "<line class=\"bar dim{}\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" \
                 stroke=\"{}\" stroke-width=\"3\"/>\n",
                p.dim,
                fmt(sx(p.birth)),
                fmt(y),
                fmt(sx(d).max(sx(p.birth) + 0.5)),
                fmt(y),
                color(p.dim)
            )),
            None => svg.push_str(&format!(
                "<line class=\"bar essential dim{}\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" \
                 stroke=\"{}\" stroke-width=\"3\" marker-end=\"url(#arrow)\"/>\n",
                p.dim,
                fmt(sx(p.birth)),
                fmt(y),
                fmt(W - MARGIN),
                fmt(y),
                color(p.dim)
            )),
        }
    }
    svg.push_str("</svg>\n");
    svg
}

/// A labelled family of curves over a shared grid; the common shape of
/// landscape and Betti CSV artifacts.
pub struct Levels {
    pub grid: Vec<f64>,
    pub rows: Vec<(String, Vec<f64>)>,
}

pub fn levels_from_landscape(l: &Landscape) -> Levels {
    Levels {
        grid: l.grid.clone(),
        rows: l
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| (format!("lambda_{}", i + 1), v.clone()))
            .collect(),
    }
}

pub fn levels_from_betti(b: &BettiCurve) -> Levels {
    Levels {
        grid: b.grid.clone(),
        rows: vec![(
            format!("betti_{}", b.dim),
            b.counts.iter().map(|c| *c as f64).collect(),
        )],
    }
}

/// Parse the `grid,...` header plus one row per curve, as written by the
/// landscape/Betti CSV emitters.
pub fn parse_level_csv(text: &str) -> Result<Levels> {
    let mut lines = text.lines();
    let grid_line = lines
        .next()
        .ok_or_else(|| Error::Validation("empty csv".into()))?;
    let mut cells = grid_line.split(',');
    if cells.next() != Some("grid") {
        return Err(Error::Validation("expected a 'grid' header row".into()));
    }
    let grid: Vec<f64> = cells
        .map(|c| {
            c.parse::<f64>()
                .map_err(|_| Error::Validation(format!("bad grid value {c:?}")))
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut cells = line.split(',');
        let name = cells
            .next()
            .ok_or_else(|| Error::Validation("missing row label".into()))?
            .to_string();
        let values: Vec<f64> = cells
            .map(|c| {
                c.parse::<f64>()
                    .map_err(|_| Error::Validation(format!("bad value {c:?}")))
            })
            .collect::<Result<_>>()?;
        if values.len() != grid.len() {
            return Err(Error::Validation(format!(
                "row {name} has {} values for {} grid points",
                values.len(),
                grid.len()
            )));
        }
        rows.push((name, values));
    }
    Ok(Levels { grid, rows })
}

fn polyline(xs: &[f64], ys: &[f64], stroke: &str, class: &str) -> String {
    let pts: Vec<String> = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| format!("{},{}", fmt(*x), fmt(*y)))
        .collect();
    format!(
        "<polyline class=\"{class}\" points=\"{}\" fill=\"none\" stroke=\"{stroke}\" \
         stroke-width=\"1.5\"/>\n",
        pts.join(" ")
    )
}

fn curves_svg(title: &str, levels: &Levels) -> String {
    if levels.grid.is_empty() || levels.rows.is_empty() {
        return no_features(title);
    }
    let xmax = levels.grid.last().copied().unwrap_or(1.0).max(1e-12);
    let ymax = levels
        .rows
        .iter()
        .flat_map(|(_, v)| v.iter())
        .cloned()
        .fold(0.0, f64::max)
        .max(1e-12);
    let sx = |v: f64| MARGIN + v / xmax * (W - 2.0 * MARGIN);
    let sy = |v: f64| H - MARGIN - v / ymax * (H - 2.0 * MARGIN);
    let palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2"];
    let mut svg = header(title);
    svg.push_str(&axes());
    for (i, (name, values)) in levels.rows.iter().enumerate() {
        let xs: Vec<f64> = levels.grid.iter().map(|g| sx(*g)).collect();
        let ys: Vec<f64> = values.iter().map(|v| sy(*v)).collect();
        svg.push_str(&polyline(&xs, &ys, palette[i % palette.len()], name));
    }
    svg.push_str("</svg>\n");
    svg
}

pub fn landscape_svg(levels: &Levels) -> String {
    curves_svg("persistence landscape", levels)
}

pub fn betti_svg(levels: &Levels) -> String {
    curves_svg("betti curve", levels)
}

/// Parse the indicator JSON stream (array of per-window objects).
pub fn parse_indicators(text: &str) -> Result<Levels> {
    let value: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| Error::Validation(format!("bad indicators json: {e}")))?;
    let rows = value
        .as_array()
        .ok_or_else(|| Error::Validation("indicators json must be an array".into()))?;
    let mut tsi = Vec::with_capacity(rows.len());
    let mut ntsi = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        tsi.push(
            row["tsi"]
                .as_f64()
                .ok_or_else(|| Error::Validation(format!("row {i}: missing tsi")))?,
        );
        ntsi.push(
            row["ntsi"]
                .as_f64()
                .ok_or_else(|| Error::Validation(format!("row {i}: missing ntsi")))?,
        );
    }
    Ok(Levels {
        grid: (0..tsi.len()).map(|i| i as f64).collect(),
        rows: vec![("tsi".into(), tsi), ("ntsi".into(), ntsi)],
    })
}

pub fn tsi_svg(levels: &Levels) -> String {
    curves_svg("topological stability index", levels)
}

pub fn tsi_svg_from_series(series: &TsiSeries) -> String {
    tsi_svg(&Levels {
        grid: (0..series.len()).map(|i| i as f64).collect(),
        rows: vec![
            ("tsi".into(), series.tsi.clone()),
            ("ntsi".into(), series.ntsi.clone()),
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use tda_core::persistence::PersistencePair;

    fn sample_diagram() -> PersistenceDiagram {
        PersistenceDiagram {
            pairs: vec![
                PersistencePair {
                    dim: 0,
                    birth: 0.0,
                    death: Some(1.0),
                    birth_simplex: 0,
                    death_simplex: None,
                },
                PersistencePair {
                    dim: 0,
                    birth: 0.0,
                    death: None,
                    birth_simplex: 1,
                    death_simplex: None,
                },
                PersistencePair {
                    dim: 1,
                    birth: 1.0,
                    death: Some(1.4),
                    birth_simplex: 2,
                    death_simplex: None,
                },
            ],
            max_dim: 1,
            filtration_max: 1.5,
        }
    }

    #[test]
    fn diagram_has_diagonal_and_points() {
        let svg = diagram_svg(&sample_diagram());
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("class=\"diagonal\""));
        assert_eq!(svg.matches("<circle").count(), 2);
        assert_eq!(svg.matches("class=\"essential").count(), 1);
    }

    #[test]
    fn barcode_bars_and_arrowheads() {
        let svg = barcode_svg(&sample_diagram());
        assert_eq!(svg.matches("class=\"bar").count(), 3);
        assert_eq!(svg.matches("marker-end=\"url(#arrow)\"").count(), 1);
        assert!(svg.contains("<marker id=\"arrow\""));
    }

    #[test]
    fn square_fixture_barcode_census() {
        use tda_core::complex::rips_filtration;
        use tda_core::metrics::euclidean_matrix;
        use tda_core::preprocess::{CloudProvenance, PointCloud};
        let square = PointCloud::new(
            vec![
                vec![0.0, 0.0],
                vec![1.0, 0.0],
                vec![1.0, 1.0],
                vec![0.0, 1.0],
            ],
            CloudProvenance::RawFeatures,
        )
        .unwrap();
        let dm = euclidean_matrix(&square).unwrap();
        let dgm =
            tda_core::persistence::reduce(&rips_filtration(&dm, 2, 2.0).unwrap()).unwrap();
        let svg = barcode_svg(&dgm);
        assert_eq!(svg.matches("class=\"bar").count(), 5);
        assert_eq!(svg.matches("dim0").count(), 4);
        assert_eq!(svg.matches("dim1").count(), 1);
        assert_eq!(svg.matches("marker-end").count(), 1);
    }

    #[test]
    fn empty_diagram_is_annotated() {
        let empty = PersistenceDiagram {
            pairs: vec![],
            max_dim: 1,
            filtration_max: 1.0,
        };
        for svg in [diagram_svg(&empty), barcode_svg(&empty)] {
            assert!(svg.contains("no features"));
            assert!(svg.starts_with("<svg"));
        }
    }

    #[test]
    fn level_csv_round_trip() {
        let text = "grid,0,0.5,1\nlambda_1,0,0.25,0\nlambda_2,0,0,0\n";
        let levels = parse_level_csv(text).unwrap();
        assert_eq!(levels.grid, vec![0.0, 0.5, 1.0]);
        assert_eq!(levels.rows.len(), 2);
        let svg = landscape_svg(&levels);
        assert_eq!(svg.matches("<polyline").count(), 2);
    }

    #[test]
    fn indicators_parse_and_render() {
        let text = r#"[{"tsi": 0.0, "ntsi": 0.0}, {"tsi": 0.5, "ntsi": 0.1}]"#;
        let levels = parse_indicators(text).unwrap();
        assert_eq!(levels.rows[0].1, vec![0.0, 0.5]);
        let svg = tsi_svg(&levels);
        assert_eq!(svg.matches("<polyline").count(), 2);
    }
}
