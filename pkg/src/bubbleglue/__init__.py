"""Pregluing of bubble maps into complex projective space."""
