typedef unsigned long size_t;
typedef struct _IO_FILE FILE;
extern size_t fread(void *ptr, size_t size, size_t n, FILE *stream);
extern int printf(const char *format, ...);
extern void exit(int status) __attribute__((__noreturn__));
extern void *memcpy(void *dest, const void *src, size_t n);
extern void *memset(void *s, int c, size_t n);
void do_something_with(char *local);
# 1 "running_example.c"
int read_from_file(FILE *f) {
 int length;
  fread((char *)&length, sizeof(int), 1, f);
  return length;
}

void wrapper(FILE *f, int *the_len) {
  *the_len = read_from_file(f);
}

void copy_buffer(  FILE *f_true, FILE *f_false
                 , char *buf, int which_file
                 , int use_wrapper) {
 int len;
  if(use_wrapper) {
   if(which_file) wrapper(f_true, &len);
   else           wrapper(f_false, &len);
  }
  else {
   if(which_file) len = read_from_file(f_true);
   else           len = read_from_file(f_false);
  }

  if(len > 256) {
   printf("ERROR: len is too big.\n");
   exit(1);
  }

 char local[256];
  memcpy(local, buf, len);
  memset(buf, 0, 512);
  do_something_with(local);
 } 
