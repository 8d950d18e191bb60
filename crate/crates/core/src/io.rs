//! PLY point clouds, plain-text trajectories and simulated scene folders.
//!
//! Trajectory files hold one pose per line, `index tx ty tz qx qy qz qw`,
//! mapping the frame's local coordinates into the world. Lines starting
//! with `#` and blank lines are ignored.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::{Matrix3, Quaternion, Rotation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Pose;
use crate::simulator::{Association, Scene, SceneConfig, RNG_ALGORITHM};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }

    fn decode_le(self, b: &[u8]) -> f64 {
        match self {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }
}

#[derive(Clone, Debug)]
enum Property {
    Scalar(Scalar, String),
    List(Scalar, Scalar),
}

#[derive(Clone, Debug)]
struct Element {
    name: String,
    count: u64,
    properties: Vec<Property>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Ascii,
    BinaryLe,
}

struct Header {
    format: Format,
    elements: Vec<Element>,
    body_offset: usize,
}

fn parse_header(bytes: &[u8], path: &Path) -> Result<Header> {
    let err = |m: String| Error::parse(path, m);
    let mut offset = 0;
    let mut lines = Vec::new();
    loop {
        let rest = &bytes[offset..];
        let Some(nl) = rest.iter().position(|&b| b == b'\n') else {
            return Err(err("header is not terminated by end_header".into()));
        };
        let line = std::str::from_utf8(&rest[..nl])
            .map_err(|_| err("header is not valid text".into()))?
            .trim_end_matches('\r')
            .to_string();
        offset += nl + 1;
        if line.trim() == "end_header" {
            break;
        }
        lines.push(line);
    }
    if lines.first().map(|l| l.trim()) != Some("ply") {
        return Err(err("missing 'ply' magic".into()));
    }
    let mut format = None;
    let mut elements: Vec<Element> = Vec::new();
    for line in &lines[1..] {
        let tok: Vec<&str> = line.split_whitespace().collect();
        match tok.as_slice() {
            [] | ["comment", ..] | ["obj_info", ..] => {}
            ["format", f, _version] => {
                format = Some(match *f {
                    "ascii" => Format::Ascii,
                    "binary_little_endian" => Format::BinaryLe,
                    "binary_big_endian" => {
                        return Err(Error::UnsupportedFormat {
                            path: path.to_path_buf(),
                            message: "big-endian PLY is not supported".into(),
                        })
                    }
                    other => return Err(err(format!("unknown format '{other}'"))),
                })
            }
            ["element", name, count] => elements.push(Element {
                name: name.to_string(),
                count: count
                    .parse()
                    .map_err(|_| err(format!("bad element count '{count}'")))?,
                properties: Vec::new(),
            }),
            ["property", "list", ct, it, _name] => {
                let (Some(c), Some(i)) = (Scalar::parse(ct), Scalar::parse(it)) else {
                    return Err(err(format!("bad list property types in '{line}'")));
                };
                elements
                    .last_mut()
                    .ok_or_else(|| err("property before any element".into()))?
                    .properties
                    .push(Property::List(c, i));
            }
            ["property", ty, name] => {
                let t = Scalar::parse(ty).ok_or_else(|| err(format!("unknown property type '{ty}'")))?;
                elements
                    .last_mut()
                    .ok_or_else(|| err("property before any element".into()))?
                    .properties
                    .push(Property::Scalar(t, name.to_string()));
            }
            _ => return Err(err(format!("unrecognized header line '{line}'"))),
        }
    }
    let format = format.ok_or_else(|| err("missing format line".into()))?;
    Ok(Header {
        format,
        elements,
        body_offset: offset,
    })
}

/// Value source over the PLY body.
trait Body {
    fn next(&mut self, ty: Scalar) -> Option<f64>;
}

struct BinaryBody<'a> {
    data: &'a [u8],
    pos: usize,
}

impl Body for BinaryBody<'_> {
    fn next(&mut self, ty: Scalar) -> Option<f64> {
        let end = self.pos.checked_add(ty.size())?;
        let b = self.data.get(self.pos..end)?;
        self.pos = end;
        Some(ty.decode_le(b))
    }
}

struct AsciiBody<'a> {
    tokens: std::str::SplitAsciiWhitespace<'a>,
}

impl Body for AsciiBody<'_> {
    fn next(&mut self, _: Scalar) -> Option<f64> {
        self.tokens.next()?.parse().ok()
    }
}

fn list_len(v: f64) -> Option<u64> {
    (v >= 0.0 && v.fract() == 0.0 && v < u32::MAX as f64 + 1.0).then_some(v as u64)
}

fn read_vertices(header: &Header, body: &mut dyn Body, path: &Path) -> Result<Vec<Vector3<f64>>> {
    let truncated = || Error::parse(path, "unexpected end of data or malformed value");
    for el in &header.elements {
        if el.name != "vertex" {
            if el.properties.is_empty() {
                continue;
            }
            for _ in 0..el.count {
                for p in &el.properties {
                    match p {
                        Property::Scalar(t, _) => {
                            body.next(*t).ok_or_else(truncated)?;
                        }
                        Property::List(c, i) => {
                            let n = list_len(body.next(*c).ok_or_else(truncated)?).ok_or_else(truncated)?;
                            for _ in 0..n {
                                body.next(*i).ok_or_else(truncated)?;
                            }
                        }
                    }
                }
            }
            continue;
        }
        let slot = |axis: &str| {
            el.properties
                .iter()
                .position(|p| matches!(p, Property::Scalar(_, n) if n == axis))
        };
        let (Some(ix), Some(iy), Some(iz)) = (slot("x"), slot("y"), slot("z")) else {
            return Err(Error::parse(path, "vertex element lacks x, y or z"));
        };
        let mut points = Vec::with_capacity(el.count.min(1 << 20) as usize);
        let mut xyz = [0.0; 3];
        for _ in 0..el.count {
            for (k, p) in el.properties.iter().enumerate() {
                match p {
                    Property::Scalar(t, _) => {
                        let v = body.next(*t).ok_or_else(truncated)?;
                        if k == ix {
                            xyz[0] = v;
                        } else if k == iy {
                            xyz[1] = v;
                        } else if k == iz {
                            xyz[2] = v;
                        }
                    }
                    Property::List(c, i) => {
                        let n = list_len(body.next(*c).ok_or_else(truncated)?).ok_or_else(truncated)?;
                        for _ in 0..n {
                            body.next(*i).ok_or_else(truncated)?;
                        }
                    }
                }
            }
            points.push(Vector3::from(xyz));
        }
        return Ok(points);
    }
    Err(Error::parse(path, "no vertex element"))
}

/// Parse PLY bytes; `path` is only used in error messages.
pub fn parse_ply(bytes: &[u8], path: &Path) -> Result<Vec<Vector3<f64>>> {
    let header = parse_header(bytes, path)?;
    let data = &bytes[header.body_offset..];
    match header.format {
        Format::BinaryLe => read_vertices(&header, &mut BinaryBody { data, pos: 0 }, path),
        Format::Ascii => {
            let text = std::str::from_utf8(data).map_err(|_| Error::parse(path, "ASCII body is not valid text"))?;
            read_vertices(
                &header,
                &mut AsciiBody {
                    tokens: text.split_ascii_whitespace(),
                },
                path,
            )
        }
    }
}

pub fn read_ply(path: &Path) -> Result<Vec<Vector3<f64>>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_ply(&bytes, path)
}

/// ASCII PLY with double-precision coordinates; values round-trip exactly.
pub fn format_ply(points: &[Vector3<f64>]) -> String {
    let mut out = format!(
        "ply\nformat ascii 1.0\nelement vertex {}\nproperty double x\nproperty double y\nproperty double z\nend_header\n",
        points.len()
    );
    for p in points {
        let _ = writeln!(out, "{:?} {:?} {:?}", p.x, p.y, p.z);
    }
    out
}

pub fn write_ply(path: &Path, points: &[Vector3<f64>]) -> Result<()> {
    std::fs::write(path, format_ply(points)).map_err(|e| Error::io(path, e))
}

/// Binary little-endian PLY with the given scalar type for x, y, z.
pub fn format_ply_binary(points: &[Vector3<f64>], single: bool) -> Vec<u8> {
    let ty = if single { "float" } else { "double" };
    let mut out = format!(
        "ply\nformat binary_little_endian 1.0\nelement vertex {}\nproperty {ty} x\nproperty {ty} y\nproperty {ty} z\nend_header\n",
        points.len()
    )
    .into_bytes();
    for p in points {
        for v in p.iter() {
            if single {
                out.extend_from_slice(&(*v as f32).to_le_bytes());
            } else {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    out
}

/// `.ply` files of a directory sorted by file name.
pub fn list_ply(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .is_some_and(|x| x.eq_ignore_ascii_case("ply"))
        })
        .collect();
    files.sort();
    Ok(files)
}

fn pose_quaternion(pose: &Pose) -> UnitQuaternion<f64> {
    let q = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(pose.rotation));
    if q.w < 0.0 {
        UnitQuaternion::new_unchecked(-q.into_inner())
    } else {
        q
    }
}

pub fn format_trajectory(poses: &[Pose]) -> String {
    let mut out = String::new();
    for (k, p) in poses.iter().enumerate() {
        let q = pose_quaternion(p);
        // adding 0.0 turns -0 into 0
        let v = [
            p.translation.x,
            p.translation.y,
            p.translation.z,
            q.i,
            q.j,
            q.k,
            q.w,
        ]
        .map(|x| x + 0.0);
        let _ = writeln!(out, "{k} {} {} {} {} {} {} {}", v[0], v[1], v[2], v[3], v[4], v[5], v[6]);
    }
    out
}

pub fn write_trajectory(path: &Path, poses: &[Pose]) -> Result<()> {
    std::fs::write(path, format_trajectory(poses)).map_err(|e| Error::io(path, e))
}

/// Parse trajectory text; `path` is only used in error messages.
pub fn parse_trajectory(text: &str, path: &Path) -> Result<Vec<Pose>> {
    let mut poses = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tok: Vec<&str> = line.split_whitespace().collect();
        if tok.len() != 8 {
            return Err(Error::parse(
                path,
                format!("line {line_no}: expected 8 fields, found {}", tok.len()),
            ));
        }
        let index: usize = tok[0]
            .parse()
            .map_err(|_| Error::parse(path, format!("line {line_no}: bad index '{}'", tok[0])))?;
        if index != poses.len() {
            return Err(Error::parse(
                path,
                format!("line {line_no}: expected index {}, found {index}", poses.len()),
            ));
        }
        let mut v = [0.0; 7];
        for (slot, t) in v.iter_mut().zip(&tok[1..]) {
            *slot = t
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::parse(path, format!("line {line_no}: bad number '{t}'")))?;
        }
        let q = Quaternion::new(v[6], v[3], v[4], v[5]);
        let norm = q.norm();
        if !((norm - 1.0).abs() <= 1e-3) {
            return Err(Error::NonUnitQuaternion {
                path: path.to_path_buf(),
                line: line_no,
                norm,
            });
        }
        let rotation: Matrix3<f64> = UnitQuaternion::from_quaternion(q).to_rotation_matrix().into_inner();
        poses.push(Pose::new(rotation, Vector3::new(v[0], v[1], v[2])));
    }
    Ok(poses)
}

pub fn read_trajectory(path: &Path) -> Result<Vec<Pose>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = std::str::from_utf8(&bytes).map_err(|_| Error::parse(path, "trajectory is not valid UTF-8"))?;
    parse_trajectory(text, path)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlaneRecord {
    pub normal: [f64; 3],
    pub anchor: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneManifest {
    pub schema_version: u32,
    pub rng: String,
    pub config: SceneConfig,
    pub rot_sigma: f64,
    pub trans_sigma: f64,
    pub perturb_seed: u64,
    pub frames: Vec<String>,
    pub ground_truth: String,
    pub initial: String,
    pub planes: Vec<PlaneRecord>,
    pub associations: Vec<Association>,
}

/// Perturbation applied to the ground truth to get the initial trajectory.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Perturbation {
    pub rot_sigma: f64,
    pub trans_sigma: f64,
    pub seed: u64,
}

/// Write a scene folder: one PLY per frame (local coordinates), `gt.txt`,
/// `init.txt` and `manifest.json`.
pub fn write_scene(
    dir: &Path,
    scene: &Scene,
    config: &SceneConfig,
    initial: &[Pose],
    perturbation: Perturbation,
) -> Result<SceneManifest> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut frames = Vec::with_capacity(scene.clouds.len());
    for (k, cloud) in scene.clouds.iter().enumerate() {
        let name = format!("frame_{k:04}.ply");
        write_ply(&dir.join(&name), cloud)?;
        frames.push(name);
    }
    write_trajectory(&dir.join("gt.txt"), &scene.gt_poses)?;
    write_trajectory(&dir.join("init.txt"), initial)?;
    let manifest = SceneManifest {
        schema_version: SCHEMA_VERSION,
        rng: RNG_ALGORITHM.to_string(),
        config: config.clone(),
        rot_sigma: perturbation.rot_sigma,
        trans_sigma: perturbation.trans_sigma,
        perturb_seed: perturbation.seed,
        frames,
        ground_truth: "gt.txt".into(),
        initial: "init.txt".into(),
        planes: scene
            .planes
            .iter()
            .map(|p| PlaneRecord {
                normal: p.normal.into(),
                anchor: p.anchor.into(),
            })
            .collect(),
        associations: scene.associations.clone(),
    };
    let path = dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::parse(&path, e.to_string()))?;
    std::fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{exp_se3, Twist};
    use crate::simulator::{generate_scene, perturb_poses};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p() -> &'static Path {
        Path::new("test.ply")
    }

    fn random_points(n: usize, seed: u64) -> Vec<Vector3<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| Vector3::from_fn(|_, _| rng.random_range(-1e3..1e3) * rng.random::<f64>().powi(9)))
            .collect()
    }

    #[test]
    fn ascii_round_trip_is_bit_exact() {
        let pts = random_points(500, 1);
        let back = parse_ply(format_ply(&pts).as_bytes(), p()).unwrap();
        assert_eq!(pts.len(), back.len());
        for (a, b) in pts.iter().zip(&back) {
            for i in 0..3 {
                assert_eq!(a[i].to_bits(), b[i].to_bits());
            }
        }
    }

    #[test]
    fn empty_cloud_round_trip() {
        let text = format_ply(&[]);
        assert!(text.contains("element vertex 0\n"));
        assert!(parse_ply(text.as_bytes(), p()).unwrap().is_empty());
    }

    #[test]
    fn binary_double_and_float() {
        let pts = random_points(100, 2);
        let back = parse_ply(&format_ply_binary(&pts, false), p()).unwrap();
        assert_eq!(pts, back);
        let single = parse_ply(&format_ply_binary(&pts, true), p()).unwrap();
        for (a, b) in pts.iter().zip(&single) {
            for i in 0..3 {
                assert_eq!(b[i], a[i] as f32 as f64);
            }
        }
    }

    #[test]
    fn extra_properties_and_elements_are_skipped() {
        let text = "ply\nformat ascii 1.0\ncomment made by hand\nelement camera 1\nproperty float fov\n\
element vertex 2\nproperty uchar red\nproperty float x\nproperty float y\nproperty list uchar int idx\n\
property float z\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n\
45.0\n255 1 2 3 7 8 9 3\n0 4 5 0 6\n3 0 1 1\n";
        let pts = parse_ply(text.as_bytes(), p()).unwrap();
        assert_eq!(pts, vec![Vector3::new(1.0, 2.0, 3.0), Vector3::new(4.0, 5.0, 6.0)]);

        let mut bin = b"ply\r\nformat binary_little_endian 1.0\r\nelement vertex 1\r\nproperty double x\r\n\
property ushort tag\r\nproperty double y\r\nproperty double z\r\nend_header\r\n"
            .to_vec();
        bin.extend_from_slice(&1.5f64.to_le_bytes());
        bin.extend_from_slice(&7u16.to_le_bytes());
        bin.extend_from_slice(&2.5f64.to_le_bytes());
        bin.extend_from_slice(&3.5f64.to_le_bytes());
        assert_eq!(parse_ply(&bin, p()).unwrap(), vec![Vector3::new(1.5, 2.5, 3.5)]);
    }

    #[test]
    fn truncated_and_unsupported() {
        let pts = random_points(10, 3);
        let bin = format_ply_binary(&pts, false);
        assert!(matches!(parse_ply(&bin[..bin.len() - 5], p()), Err(Error::Parse { .. })));
        let text = format_ply(&pts);
        let cut = &text[..text.len() - 40];
        assert!(matches!(parse_ply(cut.as_bytes(), p()), Err(Error::Parse { .. })));
        let be = b"ply\nformat binary_big_endian 1.0\nelement vertex 0\nproperty float x\nend_header\n";
        assert!(matches!(parse_ply(be, p()), Err(Error::UnsupportedFormat { .. })));
        let no_xyz = b"ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nend_header\n1\n";
        assert!(matches!(parse_ply(no_xyz, p()), Err(Error::Parse { .. })));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.ply");
        let pts = random_points(50, 4);
        write_ply(&path, &pts).unwrap();
        assert_eq!(read_ply(&path).unwrap(), pts);
        assert!(matches!(read_ply(&dir.path().join("missing.ply")), Err(Error::Io { .. })));
    }

    #[test]
    fn identity_trajectory_line() {
        assert_eq!(format_trajectory(&[Pose::identity()]), "0 0 0 0 0 0 0 1\n");
    }

    #[test]
    fn trajectory_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let poses: Vec<_> = (0..200)
            .map(|_| exp_se3(&Twist::from_slice(&std::array::from_fn(|_| rng.random_range(-3.0..3.0)))))
            .collect();
        let back = parse_trajectory(&format_trajectory(&poses), p()).unwrap();
        for (a, b) in poses.iter().zip(&back) {
            assert!((a.rotation - b.rotation).abs().max() < 1e-12);
            assert!((a.translation - b.translation).abs().max() < 1e-12);
        }
    }

    #[test]
    fn trajectory_comments_and_normalization() {
        let text = "# header\n\n0 1 2 3 0 0 0 1.0004\n# mid\n1 0 0 0 0 0 0.7071068 0.7071068\n";
        let poses = parse_trajectory(text, p()).unwrap();
        assert_eq!(poses.len(), 2);
        assert!((poses[0].rotation - Matrix3::identity()).abs().max() < 1e-12);
        assert!((poses[1].rotation.determinant() - 1.0).abs() < 1e-12);
        let bad = "0 0 0 0 0 0 0 1.01\n";
        assert!(matches!(
            parse_trajectory(bad, p()),
            Err(Error::NonUnitQuaternion { line: 1, .. })
        ));
        assert!(matches!(parse_trajectory("0 0 0 0\n", p()), Err(Error::Parse { .. })));
        assert!(matches!(
            parse_trajectory("1 0 0 0 0 0 0 1\n", p()),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn scene_folder() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = SceneConfig {
            num_poses: 3,
            num_planes: 4,
            points_per_plane_per_frame: 20,
            ..Default::default()
        };
        let scene = generate_scene(&cfg).unwrap();
        let init = perturb_poses(&scene.gt_poses, 0.01, 0.01, 9);
        let pert = Perturbation { rot_sigma: 0.01, trans_sigma: 0.01, seed: 9 };
        let m = write_scene(dir.path(), &scene, &cfg, &init, pert).unwrap();
        assert_eq!(m.schema_version, 1);
        assert_eq!(m.rng, "ChaCha8");
        let files = list_ply(dir.path()).unwrap();
        assert_eq!(files.len(), 3);
        for (k, f) in files.iter().enumerate() {
            assert_eq!(read_ply(f).unwrap(), scene.clouds[k]);
        }
        assert_eq!(read_trajectory(&dir.path().join("gt.txt")).unwrap().len(), 3);
        let json: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
        assert_eq!(json["schema_version"], 1);
    }

    proptest! {
        #[test]
        fn ply_reader_is_total(bytes in proptest::collection::vec(any::<u8>(), 0..512)) {
            let _ = parse_ply(&bytes, p());
        }

        #[test]
        fn ply_reader_is_total_after_valid_header(
            fmt in prop_oneof![Just("ascii"), Just("binary_little_endian")],
            count in 0u64..1_000_000_000_000,
            body in proptest::collection::vec(any::<u8>(), 0..256),
        ) {
            let mut bytes = format!(
                "ply\nformat {fmt} 1.0\nelement vertex {count}\nproperty float x\nproperty float y\n\
property list uchar int n\nproperty float z\nend_header\n"
            ).into_bytes();
            bytes.extend(body);
            let _ = parse_ply(&bytes, p());
        }

        #[test]
        fn trajectory_reader_is_total(text in "[-0-9#. \n a-z]{0,300}") {
            let _ = parse_trajectory(&text, p());
        }
    }
}
