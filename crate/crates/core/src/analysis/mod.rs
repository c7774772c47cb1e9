//! Clustering of layer representations and linear projection to low
//! dimension.

mod dbscan;
mod pca;

pub use dbscan::{
    dbscan, project_clusters_to_data, resolve_eps, write_assignment_csv, ClusterAssignment,
    ClusterCloud, DbscanParams, EpsPolicy,
};
pub use pca::{pca_fit, pca_project, PcaModel};
