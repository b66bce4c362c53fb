# Init file untuk package services
