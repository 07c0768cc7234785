//! Linear Lagrange finite elements on tetrahedra and boundary triangles.

mod assembly;
mod element;

pub use assembly::{
    assemble_boundary_load, assemble_boundary_load_corners, assemble_boundary_mass,
    assemble_gradient_load, assemble_stiffness, assemble_volume_load, assemble_volume_mass,
    sample_at_centroids, tet_mass, tet_stiffness,
};
pub use element::{
    element_mass, element_stiffness, face_mass, face_mass_from_area, tet_gradients, ElementMatrix,
};
