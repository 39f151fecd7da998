"""Navigation mathematics, the IMU simulator and the alignment estimators."""
