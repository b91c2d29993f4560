//! Surface remeshing by centroidal Voronoi tessellation restricted to a
//! triangle mesh, with each Voronoi cell clipped by one to three planes of
//! the original facets near its site.

pub mod cell;
pub mod cli;
pub mod clipper;
pub mod cvt;
pub mod extract;
pub mod mesh;
pub mod metrics;
pub mod shapes;
pub mod spatial;
