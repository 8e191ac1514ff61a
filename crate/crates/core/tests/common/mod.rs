#![allow(dead_code)]

use calderon_lab::admittivity::{Admittivity, AffineComplex, AnisotropyField};
use calderon_lab::geometry::{DomainSpec, Face, LayeredDomain, PortionSpec};
use calderon_lab::mesh::StructuredMesh;
use calderon_lab::scalar::{Mat3, Vec3};

/// Two nested unit-scale boxes, `Σ` on the bottom face, slab below it.
pub fn domain_spec(pitch: f64) -> DomainSpec {
    DomainSpec {
        boxes: vec![[[0.0; 3], [1.0; 3]], [[0.25; 3], [0.75; 3]]],
        portions: vec![
            PortionSpec { owner: 0, face: Face::ZMinus, lo: [0.125, 0.125], hi: [0.875, 0.875] },
            PortionSpec { owner: 1, face: Face::ZMinus, lo: [0.375, 0.375], hi: [0.625, 0.625] },
        ],
        pitch,
    }
}

pub fn mesh(res: usize) -> StructuredMesh {
    let d = LayeredDomain::build(&domain_spec(0.125), 0.75).unwrap().augment(0.75).unwrap();
    StructuredMesh::build(&d, res).unwrap()
}

pub fn homogeneous() -> Admittivity {
    Admittivity::new(vec![AffineComplex::one(); 2], AnisotropyField::identity())
}

pub fn layered() -> Admittivity {
    Admittivity::new(
        vec![
            AffineComplex { s_r: 1.0, s_i: 0.2, g_r: Vec3::new(0.2, 0.1, 0.0), g_i: Vec3::new(0.0, 0.05, 0.1) },
            AffineComplex { s_r: 2.0, s_i: 0.5, g_r: Vec3::new(0.0, 0.3, 0.1), g_i: Vec3::new(0.1, 0.0, 0.0) },
        ],
        AnisotropyField::Constant(Mat3([[1.2, 0.1, 0.0], [0.1, 1.0, 0.05], [0.0, 0.05, 0.9]])),
    )
}

pub fn perturbed(t: f64) -> Admittivity {
    let mut a = layered();
    a.gammas[0] = a.gammas[0].add(&AffineComplex {
        s_r: 0.3 * t,
        s_i: 0.1 * t,
        g_r: Vec3::new(0.1 * t, 0.0, 0.0),
        g_i: Vec3::zero(),
    });
    a.gammas[1] = a.gammas[1].add(&AffineComplex::constant(0.5 * t, -0.2 * t));
    a
}

pub fn grid_boxes() -> (calderon_lab::geometry::Aabb, calderon_lab::geometry::Aabb) {
    use calderon_lab::geometry::Aabb;
    (
        Aabb::new(Vec3::new(0.2, 0.3, -0.6), Vec3::new(0.45, 0.7, -0.45)),
        Aabb::new(Vec3::new(0.55, 0.3, -0.6), Vec3::new(0.8, 0.7, -0.45)),
    )
}
