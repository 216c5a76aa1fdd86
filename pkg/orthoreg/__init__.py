"""Weight decorrelation regularizers, a small MLP engine and experiment runners."""
