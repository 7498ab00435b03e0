"""Domain records shared by the coders."""
