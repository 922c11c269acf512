//! Map serialization: ASCII PLY point list plus a label-color sidecar.

use super::octree::SemanticOctree;
use super::segment::LabelPalette;
use crate::error::Result;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Renders the map as an ASCII PLY vertex list, one vertex per voxel
/// center, in Morton order so identical maps serialize identically.
pub fn map_to_ply(map: &SemanticOctree) -> String {
    let mut out = String::new();
    out.push_str("ply\nformat ascii 1.0\n");
    out.push_str(&format!("comment voxel_resolution {}\n", map.resolution()));
    out.push_str(&format!("element vertex {}\n", map.len()));
    out.push_str("property float x\nproperty float y\nproperty float z\n");
    out.push_str("property uchar label\nproperty float probability\n");
    out.push_str("end_header\n");
    for (coord, probs) in map.iter_sorted() {
        let c = map.voxel_center(coord);
        let (label, prob) = SemanticOctree::most_likely(probs);
        out.push_str(&format!(
            "{:.6} {:.6} {:.6} {} {:.6}\n",
            c.x, c.y, c.z, label, prob
        ));
    }
    out
}

/// Path of the JSON sidecar written next to a PLY file.
pub fn sidecar_path(ply_path: &Path) -> PathBuf {
    let mut name = ply_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "map".to_string());
    name.push_str(".labels.json");
    ply_path.with_file_name(name)
}

/// Writes the PLY file and a `<stem>.labels.json` sidecar mapping label
/// ids to display colors.
pub fn map_export(map: &SemanticOctree, palette: &LabelPalette, path: &Path) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(map_to_ply(map).as_bytes())?;
    file.flush()?;

    let mut colors = BTreeMap::new();
    for (i, c) in palette.colors().iter().enumerate() {
        let rgb: Vec<u8> = c.iter().map(|&v| (v * 255.0).round() as u8).collect();
        colors.insert(i.to_string(), rgb);
    }
    let sidecar = serde_json::to_string_pretty(&colors)?;
    std::fs::write(sidecar_path(path), sidecar)?;
    Ok(())
}

/// One parsed PLY vertex row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlyVertex {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub label: u8,
    pub probability: f64,
}

/// Minimal reader for the exact PLY dialect written by [`map_to_ply`].
pub fn parse_ply(text: &str) -> Result<Vec<PlyVertex>> {
    use crate::error::CoreError;
    let mut lines = text.lines();
    let mut count: Option<usize> = None;
    if lines.next() != Some("ply") {
        return Err(CoreError::InvalidInput("missing ply magic".into()));
    }
    for line in lines.by_ref() {
        if line == "end_header" {
            break;
        }
        if let Some(rest) = line.strip_prefix("element vertex ") {
            count = Some(
                rest.trim()
                    .parse()
                    .map_err(|_| CoreError::InvalidInput("bad vertex count".into()))?,
            );
        }
    }
    let count = count.ok_or_else(|| CoreError::InvalidInput("no vertex element".into()))?;
    let mut vertices = Vec::with_capacity(count);
    for line in lines.take(count) {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 5 {
            return Err(CoreError::InvalidInput(format!(
                "expected 5 vertex fields, got {}",
                f.len()
            )));
        }
        let num =
            |s: &str| -> Result<f64> { s.parse().map_err(|_| CoreError::InvalidInput(format!("bad number '{s}'"))) };
        vertices.push(PlyVertex {
            x: num(f[0])?,
            y: num(f[1])?,
            z: num(f[2])?,
            label: f[3]
                .parse()
                .map_err(|_| CoreError::InvalidInput(format!("bad label '{}'", f[3])))?,
            probability: num(f[4])?,
        });
    }
    if vertices.len() != count {
        return Err(CoreError::InvalidInput(format!(
            "header promised {count} vertices, found {}",
            vertices.len()
        )));
    }
    Ok(vertices)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapping::octree::labeled_point;

    fn palette3() -> LabelPalette {
        LabelPalette::new(vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]).unwrap()
    }

    #[test]
    fn empty_map_exports_zero_vertices() {
        let map = SemanticOctree::new(0.05, 3).unwrap();
        let ply = map_to_ply(&map);
        assert!(ply.contains("element vertex 0"));
        assert!(parse_ply(&ply).unwrap().is_empty());
    }

    #[test]
    fn single_voxel_exports_its_center_and_label() {
        let mut map = SemanticOctree::new(0.05, 3).unwrap();
        map.fuse_observation(&labeled_point(0.07, 0.0, 0.0, 2), 0.9)
            .unwrap();
        let verts = parse_ply(&map_to_ply(&map)).unwrap();
        assert_eq!(verts.len(), 1);
        assert!((verts[0].x - 0.075).abs() < 1e-9);
        assert!((verts[0].y - 0.025).abs() < 1e-9);
        assert_eq!(verts[0].label, 2);
        assert!((verts[0].probability - 0.9).abs() < 1e-6);
    }

    #[test]
    fn export_parse_round_trip_preserves_count_and_labels() {
        let mut map = SemanticOctree::new(0.05, 3).unwrap();
        for (i, x) in [0.01, 0.08, 0.13, 0.22, -0.04].iter().enumerate() {
            map.fuse_observation(&labeled_point(*x, 0.0, 0.3, (i % 3) as u8), 0.9)
                .unwrap();
        }
        let ply = map_to_ply(&map);
        let verts = parse_ply(&ply).unwrap();
        assert_eq!(verts.len(), map.len());
        let expect: Vec<u8> = map
            .iter_sorted()
            .map(|(_, p)| SemanticOctree::most_likely(p).0)
            .collect();
        let got: Vec<u8> = verts.iter().map(|v| v.label).collect();
        assert_eq!(got, expect);
    }

    #[test]
    fn files_land_next_to_each_other() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scene.ply");
        let mut map = SemanticOctree::new(0.05, 3).unwrap();
        map.fuse_observation(&labeled_point(0.0, 0.0, 1.0, 1), 0.9)
            .unwrap();
        map_export(&map, &palette3(), &path).unwrap();
        assert!(path.exists());
        let sidecar = sidecar_path(&path);
        assert_eq!(sidecar.file_name().unwrap(), "scene.labels.json");
        let text = std::fs::read_to_string(sidecar).unwrap();
        let parsed: std::collections::BTreeMap<String, Vec<u8>> =
            serde_json::from_str(&text).unwrap();
        assert_eq!(parsed["0"], vec![255, 0, 0]);
        assert_eq!(parsed["2"], vec![0, 0, 255]);
    }

    #[test]
    fn identical_maps_serialize_identically() {
        let build = || {
            let mut map = SemanticOctree::new(0.05, 3).unwrap();
            for x in [0.31, -0.17, 0.02] {
                map.fuse_observation(&labeled_point(x, 0.1, 0.9, 1), 0.9)
                    .unwrap();
            }
            map_to_ply(&map)
        };
        assert_eq!(build(), build());
    }

    #[test]
    fn parser_rejects_foreign_text() {
        assert!(parse_ply("not a ply file").is_err());
        assert!(parse_ply("ply\nformat ascii 1.0\nend_header\n").is_err());
    }
}
