"""Long-wave models over uneven bottoms: exact and expanded operators, model families and error studies."""
