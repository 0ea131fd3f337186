"""Kubernetes two-tier autoscaling simulator with YoYo attack damage metrics and detection."""
