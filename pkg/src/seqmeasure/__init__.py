"""Sequential hierarchy of measures on computable subsets of the naturals."""
