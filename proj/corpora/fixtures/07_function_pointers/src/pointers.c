typedef unsigned long size_t;
typedef struct _IO_FILE FILE;
extern FILE *fopen(const char *path, const char *mode);
extern int fclose(FILE *stream);
extern size_t fread(void *ptr, size_t size, size_t n, FILE *stream);
extern int printf(const char *format, ...);
extern void exit(int status) __attribute__((__noreturn__));
extern void *memcpy(void *dest, const void *src, size_t n);
extern void *memset(void *s, int c, size_t n);

static int checksum(const char *p, int n) {
  int sum = 0;
  int i;
  for (i = 0; i < n; i++)
    sum = sum + p[i];
  return sum;
}

typedef int (*reader_fn)(FILE *);

int read_a(FILE *f) {
  int v = 0;
  fread(&v, sizeof(int), 1, f);
  return v;
}

int read_b(FILE *f) {
  int v = 8;
  return v + 8;
}

void process_with(FILE *f, int which) {
  char src[512];
  char dst[200];
  reader_fn fn = which ? read_a : read_b;
  int n = fn(f);
  memset(src, 'f', sizeof(src));
  if (n > 200) {
    printf("too big\n");
    exit(1);
  }
  memcpy(dst, src, n);
  printf("n %d sum %d\n", n, checksum(dst, n));
}

void process(FILE *f) { process_with(f, 1); }

int main(int argc, char **argv) {
  FILE *f;
  if (argc < 2)
    return 2;
  f = fopen(argv[1], "rb");
  if (!f)
    return 2;
  process(f);
  fclose(f);
  return 0;
}
