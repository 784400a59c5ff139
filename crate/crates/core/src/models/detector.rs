//! Threshold + 4-connected component object detector.
//!
//! Pixels with intensity strictly above the threshold are foreground.
//! Components are labelled with a two-pass union-find scan; per-component
//! statistics are accumulated in row-major order so results are
//! bit-reproducible.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::pgm::GrayImage;
use crate::io::IoDescriptor;
use crate::metadata::ModelMetadata;
use crate::pipeline::{Instances, ModelWrapper, ParsedRequest, StageError};

pub const OUTPUT_SCHEMA: &str = "detection.v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub label_id: String,
    pub label: String,
    /// Mean original intensity over the component's pixels.
    pub probability: f64,
    /// `[ymin, xmin, ymax, xmax]`, normalized to the image size.
    pub detection_box: [f64; 4],
}

/// Contents of a detector's `weights.json`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorParams {
    pub threshold: f64,
    pub min_area: usize,
}

impl Default for DetectorParams {
    fn default() -> Self {
        DetectorParams {
            threshold: 0.5,
            min_area: 4,
        }
    }
}

impl DetectorParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(format!("threshold {} must lie in [0, 1]", self.threshold));
        }
        if self.min_area < 1 {
            return Err("min_area must be at least 1".into());
        }
        Ok(())
    }
}

struct Component {
    area: usize,
    sum: f64,
    top: usize,
    left: usize,
    bottom: usize,
    right: usize,
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

fn union(parent: &mut [usize], a: usize, b: usize) -> usize {
    let (ra, rb) = (find(parent, a), find(parent, b));
    let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
    parent[hi] = lo;
    lo
}

pub fn detect_components(img: &GrayImage, params: &DetectorParams) -> Vec<Detection> {
    let (w, h) = (img.width(), img.height());
    const BACKGROUND: usize = usize::MAX;

    // First pass: provisional labels with equivalences in `parent`.
    let mut labels = vec![BACKGROUND; w * h];
    let mut parent: Vec<usize> = Vec::new();
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            if img.data()[i] <= params.threshold {
                continue;
            }
            let up = if r > 0 { labels[i - w] } else { BACKGROUND };
            let left = if c > 0 { labels[i - 1] } else { BACKGROUND };
            labels[i] = match (up != BACKGROUND, left != BACKGROUND) {
                (false, false) => {
                    parent.push(parent.len());
                    parent.len() - 1
                }
                (true, false) => up,
                (false, true) => left,
                (true, true) => union(&mut parent, up, left),
            };
        }
    }

    // Second pass: resolve roots and accumulate statistics.
    let mut slot = vec![BACKGROUND; parent.len()];
    let mut components: Vec<Component> = Vec::new();
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            if labels[i] == BACKGROUND {
                continue;
            }
            let root = find(&mut parent, labels[i]);
            if slot[root] == BACKGROUND {
                slot[root] = components.len();
                components.push(Component {
                    area: 0,
                    sum: 0.0,
                    top: r,
                    left: c,
                    bottom: r,
                    right: c,
                });
            }
            let comp = &mut components[slot[root]];
            comp.area += 1;
            comp.sum += img.data()[i];
            comp.left = comp.left.min(c);
            comp.right = comp.right.max(c);
            comp.bottom = r;
        }
    }

    let (wf, hf) = (w as f64, h as f64);
    let mut detections: Vec<Detection> = components
        .into_iter()
        .filter(|comp| comp.area >= params.min_area)
        .map(|comp| Detection {
            label_id: "1".into(),
            label: "object".into(),
            probability: comp.sum / comp.area as f64,
            detection_box: [
                comp.top as f64 / hf,
                comp.left as f64 / wf,
                (comp.bottom + 1) as f64 / hf,
                (comp.right + 1) as f64 / wf,
            ],
        })
        .collect();
    detections.sort_by(detection_order);
    detections
}

/// Probability descending, then box coordinates ascending.
pub fn detection_order(a: &Detection, b: &Detection) -> Ordering {
    b.probability.total_cmp(&a.probability).then_with(|| {
        a.detection_box
            .iter()
            .zip(&b.detection_box)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    })
}

pub struct DetectorModel {
    metadata: ModelMetadata,
    io: IoDescriptor,
    params: DetectorParams,
}

impl DetectorModel {
    pub fn new(metadata: ModelMetadata, params: DetectorParams) -> Self {
        DetectorModel {
            metadata,
            io: IoDescriptor::image(OUTPUT_SCHEMA),
            params,
        }
    }

    pub fn params(&self) -> &DetectorParams {
        &self.params
    }
}

impl ModelWrapper for DetectorModel {
    type Input = GrayImage;
    type Output = Vec<Detection>;

    fn metadata(&self) -> &ModelMetadata {
        &self.metadata
    }

    fn io(&self) -> &IoDescriptor {
        &self.io
    }

    fn pre_process(&self, request: &ParsedRequest) -> Result<GrayImage, StageError> {
        match &request.instances {
            Instances::Image(img) => Ok(img.clone()),
            Instances::Text(_) => Err(StageError::new("this model expects an image")),
        }
    }

    fn predict(&self, input: GrayImage) -> Result<Vec<Detection>, StageError> {
        Ok(detect_components(&input, &self.params))
    }

    fn post_process(&self, output: Vec<Detection>) -> Result<Vec<Value>, StageError> {
        let value = serde_json::to_value(output).map_err(|e| StageError::new(e.to_string()))?;
        Ok(vec![value])
    }
}
