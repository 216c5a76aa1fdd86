"""Fan-out of independent experiment arms."""
