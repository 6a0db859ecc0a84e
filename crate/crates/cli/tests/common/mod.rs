#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

use latentshift::geometry::{LandmarkSet, Point};
use latentshift::Image;
use latentshift_cli::manifest::{Entry, Manifest};

pub fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_latentshift"))
        .arg("--out")
        .arg(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

pub fn write_manifest(path: &Path, entries: Vec<Entry>) {
    Manifest::new(entries).save(path).unwrap();
}

/// Gray face with two bright eye blobs and a 68-point landmark list whose eye
/// groups ring the blobs.
pub fn synthetic_face(size: usize, left: Point<f64>, right: Point<f64>) -> (Image, Vec<[f64; 2]>) {
    let img = Image::from_fn(size, size, 3, |y, x, _| {
        let blob = |p: Point<f64>| {
            let d2 = (x as f64 - p.x).powi(2) + (y as f64 - p.y).powi(2);
            (-d2 / 18.0).exp()
        };
        0.1 + 0.8 * (blob(left) + blob(right)).min(1.0)
    })
    .unwrap();
    let mut pts = vec![[size as f64 / 2.0, size as f64 * 0.8]; 68];
    for k in 0..6 {
        let (s, c) = (k as f64 * std::f64::consts::PI / 3.0).sin_cos();
        pts[36 + k] = [left.x + 4.0 * c, left.y + 2.0 * s];
        pts[42 + k] = [right.x + 4.0 * c, right.y + 2.0 * s];
    }
    LandmarkSet::with_68_layout(pts.iter().map(|p| Point::new(p[0], p[1])).collect()).unwrap();
    (img, pts)
}
