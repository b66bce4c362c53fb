# Init file untuk package models
