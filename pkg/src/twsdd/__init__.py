"""Knowledge compilation of Boolean functions into canonical structured forms."""
