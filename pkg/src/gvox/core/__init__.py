"""Signal processing, coding and modelling cores."""
