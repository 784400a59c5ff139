#![allow(dead_code)]

use mx_core::models::{Detection, GrayImage};
use serde_json::Value;

/// Brute-force flood fill, written independently of the union-find detector.
/// Every pixel above `threshold` seeds a stack-based fill unless already
/// visited; the component's pixels are then sorted row-major before the
/// intensity sum so the mean is computed in a fixed order.
pub fn flood_fill_oracle(img: &GrayImage, threshold: f64, min_area: usize) -> Vec<Detection> {
    let (w, h) = (img.width(), img.height());
    let fg = |r: usize, c: usize| img.get(r, c) > threshold;
    let mut seen = vec![vec![false; w]; h];
    let mut out = Vec::new();
    for sr in 0..h {
        for sc in 0..w {
            if seen[sr][sc] || !fg(sr, sc) {
                continue;
            }
            let mut pixels = Vec::new();
            let mut stack = vec![(sr, sc)];
            seen[sr][sc] = true;
            while let Some((r, c)) = stack.pop() {
                pixels.push((r, c));
                let mut push = |nr: usize, nc: usize| {
                    if !seen[nr][nc] && fg(nr, nc) {
                        seen[nr][nc] = true;
                        stack.push((nr, nc));
                    }
                };
                if r > 0 {
                    push(r - 1, c);
                }
                if r + 1 < h {
                    push(r + 1, c);
                }
                if c > 0 {
                    push(r, c - 1);
                }
                if c + 1 < w {
                    push(r, c + 1);
                }
            }
            if pixels.len() < min_area {
                continue;
            }
            pixels.sort();
            let mut sum = 0.0;
            for &(r, c) in &pixels {
                sum += img.get(r, c);
            }
            let r0 = pixels.iter().map(|p| p.0).min().unwrap();
            let r1 = pixels.iter().map(|p| p.0).max().unwrap();
            let c0 = pixels.iter().map(|p| p.1).min().unwrap();
            let c1 = pixels.iter().map(|p| p.1).max().unwrap();
            out.push(Detection {
                label_id: "1".into(),
                label: "object".into(),
                probability: sum / pixels.len() as f64,
                detection_box: [
                    r0 as f64 / h as f64,
                    c0 as f64 / w as f64,
                    (r1 + 1) as f64 / h as f64,
                    (c1 + 1) as f64 / w as f64,
                ],
            });
        }
    }
    out.sort_by(|a, b| {
        b.probability
            .partial_cmp(&a.probability)
            .unwrap()
            .then(a.detection_box[0].partial_cmp(&b.detection_box[0]).unwrap())
            .then(a.detection_box[1].partial_cmp(&b.detection_box[1]).unwrap())
            .then(a.detection_box[2].partial_cmp(&b.detection_box[2]).unwrap())
            .then(a.detection_box[3].partial_cmp(&b.detection_box[3]).unwrap())
    });
    out
}

/// Logistic function in the `e^z / (1 + e^z)` form, a different evaluation
/// path from the model's. Agrees to within a few ulps for moderate `z`.
pub fn sigmoid_oracle(z: f64) -> f64 {
    let e = z.exp();
    e / (1.0 + e)
}

/// Replaces every scalar with its JSON type name, keeping keys and order.
pub fn shape(v: &Value) -> Value {
    match v {
        Value::Object(m) => Value::Object(m.iter().map(|(k, v)| (k.clone(), shape(v))).collect()),
        Value::Array(a) => Value::Array(a.iter().map(shape).collect()),
        Value::Number(_) => Value::String("number".into()),
        Value::String(_) => Value::String("string".into()),
        Value::Bool(_) => Value::String("bool".into()),
        Value::Null => Value::Null,
    }
}
