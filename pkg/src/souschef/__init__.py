"""souschef: ingredient recommendations for partial recipes.

Item-based collaborative filtering over a binary recipe x ingredient
matrix, with interchangeable similarity measures, optional PCA-based
densification of the ingredient vectors, and a leave-one-out ranking
evaluation harness.
"""

__version__ = "0.1.0"
