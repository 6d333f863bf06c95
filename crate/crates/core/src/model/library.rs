//! Built-in brick libraries.
//!
//! The CLEVR-style library has 6 shapes x 16 textures; the LEGO-style
//! library has 12 rectangular stud bricks x 8 textures (96 categories each).
//! Point clouds sample each solid's surface with a fixed per-shape seed, so
//! library construction is fully deterministic.

use super::{BrickShape, BrickTexture, Library, SymmetryOrder, POINT_CLOUD_SIZE};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Resolve a scene's `library_ref` to a built-in library.
pub fn resolve_library(name: &str) -> Option<Library> {
    match name {
        "clevr" => Some(clevr_library()),
        "lego" => Some(lego_library()),
        _ => None,
    }
}

pub fn clevr_library() -> Library {
    let shapes = vec![
        box_shape(0, "cube_1x1x1", 1.0, 1.0, 1.0, None),
        box_shape(1, "prism_1x1x2", 1.0, 1.0, 2.0, None),
        box_shape(2, "prism_1x2x05", 1.0, 2.0, 0.5, None),
        box_shape(3, "prism_2x2x05", 2.0, 2.0, 0.5, None),
        cylinder_shape(4, "cylinder_d1h1", 0.5, 1.0),
        wedge_shape(5, "wedge_sqrt2"),
    ];
    let names = [
        "gray", "red", "blue", "green", "brown", "purple", "cyan", "yellow", "orange", "pink",
        "lime", "teal", "navy", "maroon", "olive", "silver",
    ];
    let rgbs: [[f64; 3]; 16] = [
        [0.53, 0.53, 0.53],
        [0.68, 0.12, 0.13],
        [0.16, 0.29, 0.84],
        [0.11, 0.41, 0.08],
        [0.50, 0.29, 0.16],
        [0.51, 0.15, 0.75],
        [0.16, 0.79, 0.79],
        [1.00, 0.93, 0.20],
        [0.95, 0.52, 0.11],
        [0.95, 0.56, 0.66],
        [0.55, 0.89, 0.20],
        [0.05, 0.55, 0.50],
        [0.05, 0.10, 0.45],
        [0.45, 0.05, 0.10],
        [0.45, 0.45, 0.05],
        [0.78, 0.78, 0.80],
    ];
    let textures = names
        .iter()
        .zip(rgbs.iter())
        .enumerate()
        .map(|(i, (name, rgb))| BrickTexture { id: i as u32, name: (*name).into(), rgb: *rgb })
        .collect();
    Library { shapes, textures }
}

pub fn lego_library() -> Library {
    // 12 rectangular stud bricks, footprints in grid cells, one layer tall.
    // Every footprint fits the default 6x6 stud area.
    let dims: [(u32, u32); 12] = [
        (1, 1),
        (1, 2),
        (1, 3),
        (1, 4),
        (1, 6),
        (2, 2),
        (2, 3),
        (2, 4),
        (2, 6),
        (3, 3),
        (3, 4),
        (4, 4),
    ];
    let shapes = dims
        .iter()
        .enumerate()
        .map(|(i, &(w, l))| {
            let cells: Vec<[i32; 2]> = (0..w as i32)
                .flat_map(|x| (0..l as i32).map(move |y| [x, y]))
                .collect();
            box_shape(
                i as u32,
                &format!("brick_{w}x{l}"),
                w as f64,
                l as f64,
                1.0,
                Some(cells),
            )
        })
        .collect();
    let names = ["white", "red", "blue", "yellow", "green", "black", "tan", "dark_gray"];
    let rgbs: [[f64; 3]; 8] = [
        [0.95, 0.95, 0.95],
        [0.77, 0.00, 0.15],
        [0.00, 0.33, 0.75],
        [0.98, 0.78, 0.04],
        [0.00, 0.52, 0.17],
        [0.02, 0.07, 0.10],
        [0.89, 0.80, 0.60],
        [0.39, 0.37, 0.38],
    ];
    let textures = names
        .iter()
        .zip(rgbs.iter())
        .enumerate()
        .map(|(i, (name, rgb))| BrickTexture { id: i as u32, name: (*name).into(), rgb: *rgb })
        .collect();
    Library { shapes, textures }
}

fn shape_rng(id: u32) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0x5EED_0000_0000_0000 ^ u64::from(id))
}

fn rect_footprint(w: f64, l: f64) -> Vec<[f64; 2]> {
    vec![
        [-w / 2.0, -l / 2.0],
        [w / 2.0, -l / 2.0],
        [w / 2.0, l / 2.0],
        [-w / 2.0, l / 2.0],
    ]
}

fn box_shape(id: u32, name: &str, w: f64, l: f64, h: f64, studs: Option<Vec<[i32; 2]>>) -> BrickShape {
    let mut rng = shape_rng(id);
    let faces = [
        (w * l, 0), // bottom
        (w * l, 1), // top
        (l * h, 2), // -x
        (l * h, 3), // +x
        (w * h, 4), // -y
        (w * h, 5), // +y
    ];
    let total: f64 = faces.iter().map(|f| f.0).sum();
    let mut points = Vec::with_capacity(POINT_CLOUD_SIZE);
    for _ in 0..POINT_CLOUD_SIZE {
        let mut pick = rng.random::<f64>() * total;
        let mut face = 0usize;
        for &(a, f) in &faces {
            if pick < a {
                face = f;
                break;
            }
            pick -= a;
        }
        let (u, v) = (rng.random::<f64>(), rng.random::<f64>());
        let p = match face {
            0 => [(u - 0.5) * w, (v - 0.5) * l, -h / 2.0],
            1 => [(u - 0.5) * w, (v - 0.5) * l, h / 2.0],
            2 => [-w / 2.0, (u - 0.5) * l, (v - 0.5) * h],
            3 => [w / 2.0, (u - 0.5) * l, (v - 0.5) * h],
            4 => [(u - 0.5) * w, -l / 2.0, (v - 0.5) * h],
            _ => [(u - 0.5) * w, l / 2.0, (v - 0.5) * h],
        };
        points.push(p);
    }
    let symmetry = if (w - l).abs() < 1e-12 { SymmetryOrder::Four } else { SymmetryOrder::Two };
    BrickShape {
        id,
        name: name.into(),
        footprint: rect_footprint(w, l),
        height: h,
        point_cloud: points,
        symmetry_order: symmetry,
        stud_top: studs.clone(),
        socket_bottom: studs,
    }
}

fn cylinder_shape(id: u32, name: &str, r: f64, h: f64) -> BrickShape {
    let mut rng = shape_rng(id);
    let lateral = std::f64::consts::TAU * r * h;
    let cap = std::f64::consts::PI * r * r;
    let total = lateral + 2.0 * cap;
    let mut points = Vec::with_capacity(POINT_CLOUD_SIZE);
    for _ in 0..POINT_CLOUD_SIZE {
        let pick = rng.random::<f64>() * total;
        let theta = rng.random::<f64>() * std::f64::consts::TAU;
        if pick < lateral {
            let z = (rng.random::<f64>() - 0.5) * h;
            points.push([r * theta.cos(), r * theta.sin(), z]);
        } else {
            let rad = r * rng.random::<f64>().sqrt();
            let z = if pick < lateral + cap { -h / 2.0 } else { h / 2.0 };
            points.push([rad * theta.cos(), rad * theta.sin(), z]);
        }
    }
    // 16-gon footprint approximation for contact/stability tests.
    let footprint = (0..16)
        .map(|i| {
            let a = std::f64::consts::TAU * i as f64 / 16.0;
            [r * a.cos(), r * a.sin()]
        })
        .collect();
    BrickShape {
        id,
        name: name.into(),
        footprint,
        height: h,
        point_cloud: points,
        symmetry_order: SymmetryOrder::Continuous,
        stud_top: None,
        socket_bottom: None,
    }
}

/// Triangular prism: square base of side sqrt(2), ridge along y at height
/// sqrt(2)/2. Cross-section is the triangle (-a,0),(a,0),(0,h) in (x,z).
fn wedge_shape(id: u32, name: &str) -> BrickShape {
    let mut rng = shape_rng(id);
    let a = SQRT2 / 2.0;
    let h = SQRT2 / 2.0;
    let len = SQRT2;
    let slant = (a * a + h * h).sqrt();
    let faces = [
        (SQRT2 * len, 0),  // bottom (2a x len)
        (slant * len, 1),  // -x slope
        (slant * len, 2),  // +x slope
        (a * h, 3),        // -y triangle end
        (a * h, 4),        // +y triangle end
    ];
    let total: f64 = faces.iter().map(|f| f.0).sum();
    let mut points = Vec::with_capacity(POINT_CLOUD_SIZE);
    for _ in 0..POINT_CLOUD_SIZE {
        let mut pick = rng.random::<f64>() * total;
        let mut face = 0usize;
        for &(area, f) in &faces {
            if pick < area {
                face = f;
                break;
            }
            pick -= area;
        }
        let (u, v) = (rng.random::<f64>(), rng.random::<f64>());
        // Local frame: bounding-volume center at origin, base at z = -h/2.
        let p = match face {
            0 => [(u - 0.5) * 2.0 * a, (v - 0.5) * len, -h / 2.0],
            1 => [-a + u * a, (v - 0.5) * len, -h / 2.0 + u * h],
            2 => [a - u * a, (v - 0.5) * len, -h / 2.0 + u * h],
            3 | 4 => {
                // Uniform point in the cross-section triangle.
                let (mut s, mut t) = (u, v);
                if s + t > 1.0 {
                    s = 1.0 - s;
                    t = 1.0 - t;
                }
                let x = -a + 2.0 * a * s + a * t;
                let z = -h / 2.0 + h * t;
                let y = if face == 3 { -len / 2.0 } else { len / 2.0 };
                [x, y, z]
            }
            _ => unreachable!(),
        };
        points.push(p);
    }
    BrickShape {
        id,
        name: name.into(),
        footprint: rect_footprint(SQRT2, SQRT2),
        height: h,
        point_cloud: points,
        symmetry_order: SymmetryOrder::Two,
        stud_top: None,
        socket_bottom: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clevr_category_count() {
        let lib = clevr_library();
        assert_eq!(lib.shapes.len(), 6);
        assert_eq!(lib.textures.len(), 16);
        assert_eq!(lib.category_count(), 96);
    }

    #[test]
    fn lego_category_count_and_studs() {
        let lib = lego_library();
        assert_eq!(lib.shapes.len(), 12);
        assert_eq!(lib.textures.len(), 8);
        assert_eq!(lib.category_count(), 96);
        let b24 = lib.shapes.iter().find(|s| s.name == "brick_2x4").unwrap();
        assert_eq!(b24.stud_top.as_ref().unwrap().len(), 8);
        assert_eq!(b24.symmetry_order, SymmetryOrder::Two);
        let b22 = lib.shapes.iter().find(|s| s.name == "brick_2x2").unwrap();
        assert_eq!(b22.symmetry_order, SymmetryOrder::Four);
    }

    #[test]
    fn point_clouds_are_deterministic_and_sized() {
        let a = clevr_library();
        let b = clevr_library();
        for (sa, sb) in a.shapes.iter().zip(&b.shapes) {
            assert_eq!(sa.point_cloud.len(), POINT_CLOUD_SIZE);
            assert_eq!(sa.point_cloud, sb.point_cloud);
            // All points inside the bounding volume.
            let (bx, by, bz) = sa.point_cloud.iter().fold((0.0f64, 0.0f64, 0.0f64), |acc, p| {
                (acc.0.max(p[0].abs()), acc.1.max(p[1].abs()), acc.2.max(p[2].abs()))
            });
            assert!(bz <= sa.height / 2.0 + 1e-9, "{}: z extent {bz}", sa.name);
            assert!(bx.is_finite() && by.is_finite());
        }
    }
}
