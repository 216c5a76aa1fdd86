"""Dataset and weight-matrix ingestion."""
