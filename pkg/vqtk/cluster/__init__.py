from vqtk.cluster.kmeans import KMeansConfig, build_cluster_tokenizer, kmeans_fit, random_codebook

__all__ = ["KMeansConfig", "build_cluster_tokenizer", "kmeans_fit", "random_codebook"]
