use std::fmt::Write as _;

use super::{ElemId, MeshForest, NodeStatus};

#[derive(Clone, Debug)]
pub struct SvgOptions {
    /// Width of the drawing in pixels; the height follows the aspect ratio.
    pub width: f64,
    /// Outline elements with hanging nodes in red.
    pub mark_polygons: bool,
    /// Draw hanging nodes as dots.
    pub mark_hanging: bool,
}

impl Default for SvgOptions {
    fn default() -> Self {
        Self { width: 800.0, mark_polygons: true, mark_hanging: false }
    }
}

/// Fill color for an element bisected `count` times; counts above five share the last bucket.
pub fn heat_color(count: u32) -> &'static str {
    const PALETTE: [&str; 6] = ["#ffffff", "#fee5d9", "#fcae91", "#fb6a4a", "#de2d26", "#a50f15"];
    PALETTE[(count as usize).min(PALETTE.len() - 1)]
}

impl MeshForest {
    /// Renders the current partition; `fill` picks an optional color per element.
    pub fn to_svg(&self, opts: &SvgOptions, fill: impl Fn(ElemId) -> Option<String>) -> String {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for n in &self.nodes {
            for k in 0..2 {
                lo[k] = lo[k].min(n.xy[k]);
                hi[k] = hi[k].max(n.xy[k]);
            }
        }
        let pad = 10.0;
        let scale = (opts.width - 2.0 * pad) / (hi[0] - lo[0]).max(f64::MIN_POSITIVE);
        let height = (hi[1] - lo[1]) * scale + 2.0 * pad;
        let px = |p: [f64; 2]| (pad + (p[0] - lo[0]) * scale, height - pad - (p[1] - lo[1]) * scale);

        let mut s = String::new();
        writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" viewBox="0 0 {:.2} {:.2}">"#,
            opts.width, height, opts.width, height
        )
        .unwrap();
        let mut polygons = Vec::new();
        for e in self.alive_elements() {
            let nodes = self.boundary_nodes(e);
            let pts: Vec<String> = nodes
                .iter()
                .map(|&n| {
                    let (x, y) = px(self.nodes[n].xy);
                    format!("{x:.2},{y:.2}")
                })
                .collect();
            let color = fill(e).unwrap_or_else(|| "none".into());
            writeln!(
                s,
                r##"<polygon points="{}" fill="{color}" stroke="#333" stroke-width="0.4"/>"##,
                pts.join(" ")
            )
            .unwrap();
            if opts.mark_polygons && nodes.len() > 3 {
                polygons.push(pts.join(" "));
            }
        }
        for pts in polygons {
            writeln!(s, r##"<polygon points="{pts}" fill="none" stroke="#d62728" stroke-width="0.8"/>"##).unwrap();
        }
        if opts.mark_hanging {
            for n in self.nodes.iter().filter(|n| n.status == NodeStatus::Hanging) {
                let (x, y) = px(n.xy);
                writeln!(s, r##"<circle cx="{x:.2}" cy="{y:.2}" r="1.5" fill="#d62728"/>"##).unwrap();
            }
        }
        s.push_str("</svg>\n");
        s
    }

    /// Colors each element by how many bisections separate it from its
    /// ancestor in `snapshot`, an earlier state of the same forest.
    pub fn bisection_heatmap_svg(&self, snapshot: &MeshForest, opts: &SvgOptions) -> String {
        self.to_svg(opts, |e| {
            self.bisections_from(snapshot, e).map(|k| heat_color(k).to_string())
        })
    }
}
